//! Built-in templates and lexica for the six case studies and their
//! replications (`*_v1` and `*_r2`).

use super::{CorpusSpec, GrammaticalRole as Role, SlotSpec, Template};

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

const TRANSITIVE_VERBS_V1: [&str; 6] = ["sees", "chases", "draws", "meets", "remembers", "pokes"];
const TRANSITIVE_VERBS_R2: [&str; 6] = [
    "hears",
    "pursues",
    "imagines",
    "recognizes",
    "touches",
    "finds",
];

fn intransitive(id: &str, nouns: &[&str], adverbs: &[&str], verbs: &[&str]) -> Template {
    Template {
        id: id.into(),
        pattern: "[det] [subj] [adv] [verb][punct]".into(),
        slots: vec![
            SlotSpec::new("det", Role::Determiner, &["A", "The"]),
            SlotSpec::new("subj", Role::Subject, nouns),
            SlotSpec::new("adv", Role::Adverb, adverbs),
            SlotSpec::new("verb", Role::Predicate, verbs),
            SlotSpec::new("punct", Role::Punctuation, &[".", "!"]),
        ],
        distinct: vec![],
    }
}

pub fn intransitive_v1() -> Template {
    intransitive(
        "intransitive-v1",
        &["cat", "dog", "artist", "teacher", "planet", "star", "wind", "rain"],
        &["quickly", "slowly"],
        &["appears", "vanishes", "stops", "moves"],
    )
}

pub fn intransitive_r2() -> Template {
    intransitive(
        "intransitive-r2",
        &["wolf", "bear", "fruit", "vegetable", "building", "car", "lightning", "wave"],
        &["suddenly", "predictably"],
        &["stabilizes", "bursts", "grows", "shrinks"],
    )
}

fn transitive(id: &str, nouns: &[&str], adverbs: &[&str], verbs: &[&str]) -> Template {
    Template {
        id: id.into(),
        pattern: "The [subj] [adv] [verb] the [obj]".into(),
        slots: vec![
            SlotSpec::new("subj", Role::Subject, nouns),
            SlotSpec::new("adv", Role::Adverb, adverbs),
            SlotSpec::new("verb", Role::Predicate, verbs),
            SlotSpec::new("obj", Role::Object, nouns),
        ],
        distinct: vec![("subj".into(), "obj".into())],
    }
}

pub fn transitive_v1() -> Template {
    transitive(
        "transitive-v1",
        &[
            "cat", "dog", "teacher", "artist", "robot", "machine", "tree", "bush", "planet",
            "star", "wind", "rain",
        ],
        &["quickly", "slowly"],
        &TRANSITIVE_VERBS_V1,
    )
}

pub fn transitive_r2() -> Template {
    transitive(
        "transitive-r2",
        &[
            "pig", "horse", "soldier", "farmer", "android", "computer", "grass", "forest",
            "comet", "galaxy", "cloud", "lightning",
        ],
        &["suddenly", "predictably"],
        &TRANSITIVE_VERBS_R2,
    )
}

fn modifiers(
    id: &str,
    nouns: &[&str],
    mods: &[&str],
    adverbs: &[&str],
    verbs: &[&str],
) -> Template {
    Template {
        id: id.into(),
        pattern: "The [subj] [mod] [adv] [verb] the [obj]".into(),
        slots: vec![
            SlotSpec::new("subj", Role::Subject, nouns),
            SlotSpec::new("mod", Role::Modifier, mods),
            SlotSpec::new("adv", Role::Adverb, adverbs),
            SlotSpec::new("verb", Role::Predicate, verbs),
            SlotSpec::new("obj", Role::Object, nouns),
        ],
        distinct: vec![("subj".into(), "obj".into())],
    }
}

pub fn modifiers_v1() -> Template {
    modifiers(
        "modifiers-v1",
        &["cat", "dog", "rat", "giraffe", "wombat", "hippo"],
        &[
            "with big shiny eyes",
            "that my brother saw yesterday",
            "whose photo was in the papers",
            "worth a great deal of money",
        ],
        &["quickly", "slowly"],
        &TRANSITIVE_VERBS_V1,
    )
}

pub fn modifiers_r2() -> Template {
    modifiers(
        "modifiers-r2",
        &["horse", "pig", "donkey", "elephant", "bison", "moose"],
        &[
            "missing a hind leg",
            "whose face we all know",
            "born under a bad sign",
            "pictured on page seventeen",
        ],
        &["suddenly", "predictably"],
        &TRANSITIVE_VERBS_R2,
    )
}

pub fn coordinated_v1() -> CorpusSpec {
    CorpusSpec::CoordinatedVp {
        subject: "man".into(),
        nouns: strings(&["cat", "dog", "rat", "giraffe", "wombat", "hippo"]),
        verbs: strings(&TRANSITIVE_VERBS_V1),
    }
}

pub fn coordinated_r2() -> CorpusSpec {
    CorpusSpec::CoordinatedVp {
        subject: "man".into(),
        nouns: strings(&["mouse", "horse", "fox", "kangaroo", "bison", "elephant"]),
        verbs: strings(&TRANSITIVE_VERBS_R2),
    }
}

const COPULAS: [&str; 4] = ["is", "was", "will be", "is going to be"];
const ADJECTIVES: [&str; 4] = ["big", "real", "negligible", "insignificant"];

fn gerund(id: &str, gerunds: &[&str], objects: &[&str], predicates: &[&str]) -> Template {
    Template {
        id: id.into(),
        pattern: "[subj] [obj] [cop] a [adj] [pred]".into(),
        slots: vec![
            SlotSpec::new("subj", Role::Gerund, gerunds),
            SlotSpec::new("obj", Role::Object, objects),
            SlotSpec::new("cop", Role::Copula, &COPULAS),
            SlotSpec::new("adj", Role::Adjective, &ADJECTIVES),
            SlotSpec::new("pred", Role::Predicate, predicates),
        ],
        distinct: vec![],
    }
}

pub fn gerund_v1() -> Template {
    gerund(
        "gerund-v1",
        &["continuing", "abandoning", "starting", "completing"],
        &["it", "them", "the project", "the plan"],
        &["solution", "mistake", "failure", "triumph"],
    )
}

/// Copulas and adjectives are shared with the v1 lexicon.
pub fn gerund_r2() -> Template {
    gerund(
        "gerund-r2",
        &["proposing", "rejecting", "praising", "criticizing"],
        &["him", "me", "the idea", "the design"],
        &["decision", "defeat", "loss", "improvement"],
    )
}

pub fn ditransitive_v1() -> CorpusSpec {
    CorpusSpec::DitransitiveTriples {
        basic: strings(&["cat", "dog", "rat"]),
        extra: strings(&["giraffe", "wombat", "hippo"]),
        verbs: strings(&["describes", "sells", "shows"]),
        adverbs: strings(&["happily", "quickly", "secretly"]),
    }
}

pub fn ditransitive_r2() -> CorpusSpec {
    CorpusSpec::DitransitiveTriples {
        basic: strings(&["horse", "pig", "donkey"]),
        extra: strings(&["elephant", "bison", "moose"]),
        verbs: strings(&["gives", "demonstrates", "entrusts"]),
        adverbs: strings(&["suddenly", "predictably", "openly"]),
    }
}
