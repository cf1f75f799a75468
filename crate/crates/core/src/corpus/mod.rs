//! Controlled synthetic sentence corpora.
//!
//! Three constructions are supported:
//!
//! * [`expand_cartesian`]: every combination of slot fillers in a [`Template`],
//!   so that all features are statistically independent.
//! * [`expand_coordinated`]: one sentence per pair of 3-combinations of nouns
//!   and verbs, with both triples shuffled per sentence from a seeded RNG.
//! * [`expand_ditransitive`]: permutations of a basic noun triple plus every
//!   single-position replacement by an extra noun, crossed with verbs and
//!   adverbs.
//!
//! Every [`SentenceRecord`] carries the feature assignment it was rendered
//! from; pair coding reads those features and never looks at the surface text.

mod io;
pub mod lexicon;

use std::collections::{BTreeMap, HashSet};

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{read_corpus, write_corpus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrammaticalRole {
    Subject,
    Object,
    Oblique,
    Predicate,
    Adverb,
    Modifier,
    Determiner,
    Punctuation,
    Copula,
    Adjective,
    Gerund,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotSpec {
    pub name: String,
    pub role: GrammaticalRole,
    pub fillers: Vec<String>,
}

impl SlotSpec {
    pub fn new(name: &str, role: GrammaticalRole, fillers: &[&str]) -> Self {
        SlotSpec {
            name: name.to_string(),
            role,
            fillers: fillers.iter().map(|f| f.to_string()).collect(),
        }
    }
}

/// A sentence pattern such as `"The [subj] [adv] [verb] the [obj]"` together
/// with the filler sets of its slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub id: String,
    pub pattern: String,
    pub slots: Vec<SlotSpec>,
    /// Slot pairs whose fillers must differ within one sentence.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub distinct: Vec<(String, String)>,
}

/// One position of a coordinated or ditransitive sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PositionFiller {
    pub noun: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verb: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: usize,
    pub text: String,
    pub features: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub position_features: BTreeMap<u8, PositionFiller>,
}

impl SentenceRecord {
    pub fn feature(&self, slot: &str) -> Option<&str> {
        self.features.get(slot).map(String::as_str)
    }

    /// Nouns by position, in position order.
    pub fn position_nouns(&self) -> impl Iterator<Item = &str> {
        self.position_features.values().map(|p| p.noun.as_str())
    }

    pub fn position_verbs(&self) -> impl Iterator<Item = Option<&str>> {
        self.position_features.values().map(|p| p.verb.as_deref())
    }
}

/// How a corpus is constructed, with its lexicon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "construction", rename_all = "snake_case")]
pub enum CorpusSpec {
    Cartesian {
        template: Template,
    },
    CoordinatedVp {
        subject: String,
        nouns: Vec<String>,
        verbs: Vec<String>,
    },
    DitransitiveTriples {
        basic: Vec<String>,
        extra: Vec<String>,
        verbs: Vec<String>,
        adverbs: Vec<String>,
    },
}

impl CorpusSpec {
    pub fn generate(&self, seed: u64) -> Result<Vec<SentenceRecord>> {
        match self {
            CorpusSpec::Cartesian { template } => expand_cartesian(template),
            CorpusSpec::CoordinatedVp {
                subject,
                nouns,
                verbs,
            } => expand_coordinated(nouns, verbs, subject, seed),
            CorpusSpec::DitransitiveTriples {
                basic,
                extra,
                verbs,
                adverbs,
            } => expand_ditransitive(basic, extra, verbs, adverbs),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Literal(String),
    Slot(usize),
}

fn parse_pattern(template: &Template) -> Result<Vec<Piece>> {
    let mut pieces = Vec::new();
    let mut used = vec![false; template.slots.len()];
    let mut rest = template.pattern.as_str();
    while let Some(open) = rest.find('[') {
        if open > 0 {
            pieces.push(Piece::Literal(rest[..open].to_string()));
        }
        let close = rest[open..].find(']').ok_or_else(|| {
            Error::config(format!(
                "template `{}`: unterminated placeholder in {:?}",
                template.id, template.pattern
            ))
        })? + open;
        let name = &rest[open + 1..close];
        let idx = template
            .slots
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| {
                Error::config(format!(
                    "template `{}`: placeholder [{name}] names no slot",
                    template.id
                ))
            })?;
        if used[idx] {
            return Err(Error::config(format!(
                "template `{}`: placeholder [{name}] appears twice",
                template.id
            )));
        }
        used[idx] = true;
        pieces.push(Piece::Slot(idx));
        rest = &rest[close + 1..];
    }
    if !rest.is_empty() {
        pieces.push(Piece::Literal(rest.to_string()));
    }
    if let Some(unused) = used.iter().position(|u| !u) {
        return Err(Error::config(format!(
            "template `{}`: slot `{}` has no placeholder",
            template.id, template.slots[unused].name
        )));
    }
    Ok(pieces)
}

fn validate_slots(template: &Template) -> Result<()> {
    let mut names = HashSet::new();
    for slot in &template.slots {
        if !names.insert(slot.name.as_str()) {
            return Err(Error::config(format!(
                "template `{}`: duplicate slot `{}`",
                template.id, slot.name
            )));
        }
        if slot.fillers.is_empty() {
            return Err(Error::config(format!(
                "template `{}`: slot `{}` has no fillers",
                template.id, slot.name
            )));
        }
        let unique: HashSet<_> = slot.fillers.iter().collect();
        if unique.len() != slot.fillers.len() {
            return Err(Error::config(format!(
                "template `{}`: slot `{}` repeats a filler",
                template.id, slot.name
            )));
        }
    }
    for (a, b) in &template.distinct {
        for name in [a, b] {
            if !names.contains(name.as_str()) {
                return Err(Error::config(format!(
                    "template `{}`: distinct constraint names unknown slot `{name}`",
                    template.id
                )));
            }
        }
    }
    Ok(())
}

/// Appends a period unless the sentence already ends in punctuation. Casing
/// is left exactly as stored in the pattern and fillers.
fn finish_sentence(mut text: String) -> String {
    if !text.ends_with(['.', '!', '?']) {
        text.push('.');
    }
    text
}

/// Renders a template from a feature map. Inverse of the feature assignment
/// done by [`expand_cartesian`].
pub fn render(template: &Template, features: &BTreeMap<String, String>) -> Result<String> {
    let pieces = parse_pattern(template)?;
    let mut text = String::new();
    for piece in &pieces {
        match piece {
            Piece::Literal(s) => text.push_str(s),
            Piece::Slot(idx) => {
                let name = &template.slots[*idx].name;
                let filler = features
                    .get(name)
                    .ok_or_else(|| Error::schema(format!("missing feature `{name}`")))?;
                text.push_str(filler);
            }
        }
    }
    Ok(finish_sentence(text))
}

/// All combinations of slot fillers, last slot varying fastest. Combinations
/// violating a `distinct` constraint are skipped.
pub fn expand_cartesian(template: &Template) -> Result<Vec<SentenceRecord>> {
    validate_slots(template)?;
    parse_pattern(template)?;
    let distinct: Vec<(usize, usize)> = template
        .distinct
        .iter()
        .map(|(a, b)| {
            let pos = |n: &str| template.slots.iter().position(|s| s.name == n).unwrap();
            (pos(a), pos(b))
        })
        .collect();

    let mut records = Vec::new();
    for combo in template
        .slots
        .iter()
        .map(|s| 0..s.fillers.len())
        .multi_cartesian_product()
    {
        let fill = |slot: usize| &template.slots[slot].fillers[combo[slot]];
        if distinct.iter().any(|&(a, b)| fill(a) == fill(b)) {
            continue;
        }
        let features: BTreeMap<String, String> = template
            .slots
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.clone(), fill(i).clone()))
            .collect();
        let text = render(template, &features)?;
        records.push(SentenceRecord {
            id: records.len(),
            text,
            features,
            position_features: BTreeMap::new(),
        });
    }
    // A template with no slots still renders its literal once.
    if template.slots.is_empty() && records.is_empty() {
        records.push(SentenceRecord {
            id: 0,
            text: render(template, &BTreeMap::new())?,
            features: BTreeMap::new(),
            position_features: BTreeMap::new(),
        });
    }
    Ok(records)
}

/// Per-sentence RNG stream: a SplitMix64 step over `(seed, id)` seeds a
/// xoshiro256++ generator. Streams for different ids are independent and the
/// sequence is the same on every platform.
pub fn sentence_rng(seed: u64, id: u64) -> Xoshiro256PlusPlus {
    let mut mixer = SplitMix64::seed_from_u64(seed ^ id.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    Xoshiro256PlusPlus::seed_from_u64(mixer.next_u64())
}

fn check_unique(what: &str, items: &[String]) -> Result<()> {
    let set: HashSet<_> = items.iter().collect();
    if set.len() != items.len() {
        return Err(Error::config(format!("{what} contains duplicates")));
    }
    Ok(())
}

pub fn render_coordinated(subject: &str, positions: &BTreeMap<u8, PositionFiller>) -> String {
    let phrases: Vec<String> = positions
        .values()
        .map(|p| format!("{} the {}", p.verb.as_deref().unwrap_or_default(), p.noun))
        .collect();
    let body = match phrases.as_slice() {
        [a, b, c] => format!("{a}, {b}, and {c}"),
        other => other.join(", "),
    };
    finish_sentence(format!("The {subject} {body}"))
}

/// Coordinated-VP sentences: one per (noun 3-combination, verb 3-combination),
/// each triple shuffled with the sentence's own RNG stream.
pub fn expand_coordinated(
    nouns: &[String],
    verbs: &[String],
    subject: &str,
    seed: u64,
) -> Result<Vec<SentenceRecord>> {
    if nouns.len() < 3 || verbs.len() < 3 {
        return Err(Error::config(format!(
            "coordinated VPs need at least 3 nouns and 3 verbs, got {} and {}",
            nouns.len(),
            verbs.len()
        )));
    }
    check_unique("noun list", nouns)?;
    check_unique("verb list", verbs)?;

    let noun_triples: Vec<Vec<&String>> = nouns.iter().combinations(3).collect();
    let verb_triples: Vec<Vec<&String>> = verbs.iter().combinations(3).collect();
    let mut records = Vec::with_capacity(noun_triples.len() * verb_triples.len());
    for nt in &noun_triples {
        for vt in &verb_triples {
            let id = records.len();
            let mut rng = sentence_rng(seed, id as u64);
            let mut ns = nt.clone();
            let mut vs = vt.clone();
            ns.shuffle(&mut rng);
            vs.shuffle(&mut rng);
            let mut features = BTreeMap::new();
            features.insert("subj".to_string(), subject.to_string());
            let mut positions = BTreeMap::new();
            for (i, (n, v)) in ns.iter().zip(&vs).enumerate() {
                let pos = i as u8 + 1;
                features.insert(format!("noun{pos}"), (*n).clone());
                features.insert(format!("verb{pos}"), (*v).clone());
                positions.insert(
                    pos,
                    PositionFiller {
                        noun: (*n).clone(),
                        verb: Some((*v).clone()),
                    },
                );
            }
            records.push(SentenceRecord {
                id,
                text: render_coordinated(subject, &positions),
                features,
                position_features: positions,
            });
        }
    }
    Ok(records)
}

/// The 60 noun triples of the ditransitive design: each permutation of the
/// basic triple, plus each permutation with one position replaced by one of
/// the extra nouns.
pub fn ditransitive_triples(basic: &[String], extra: &[String]) -> Result<Vec<[String; 3]>> {
    if basic.len() != 3 || extra.len() != 3 {
        return Err(Error::config(format!(
            "ditransitive construction needs 3 basic and 3 extra nouns, got {} and {}",
            basic.len(),
            extra.len()
        )));
    }
    check_unique("basic nouns", basic)?;
    check_unique("extra nouns", extra)?;
    if let Some(shared) = basic.iter().find(|b| extra.contains(b)) {
        return Err(Error::config(format!(
            "noun `{shared}` is both a basic and an extra noun"
        )));
    }
    let mut triples = Vec::with_capacity(60);
    for perm in basic.iter().permutations(3) {
        let original = [perm[0].clone(), perm[1].clone(), perm[2].clone()];
        triples.push(original.clone());
        for pos in 0..3 {
            for e in extra {
                let mut t = original.clone();
                t[pos] = e.clone();
                triples.push(t);
            }
        }
    }
    Ok(triples)
}

pub fn render_ditransitive(triple: &[String; 3], adverb: &str, verb: &str) -> String {
    finish_sentence(format!(
        "The {} {adverb} {verb} the {} to the {}",
        triple[0], triple[1], triple[2]
    ))
}

pub fn expand_ditransitive(
    basic: &[String],
    extra: &[String],
    verbs: &[String],
    adverbs: &[String],
) -> Result<Vec<SentenceRecord>> {
    let triples = ditransitive_triples(basic, extra)?;
    if verbs.is_empty() || adverbs.is_empty() {
        return Err(Error::config("ditransitive construction needs verbs and adverbs"));
    }
    check_unique("verb list", verbs)?;
    check_unique("adverb list", adverbs)?;
    let mut records = Vec::with_capacity(triples.len() * verbs.len() * adverbs.len());
    for triple in &triples {
        for verb in verbs {
            for adverb in adverbs {
                let mut features = BTreeMap::new();
                features.insert("adv".to_string(), adverb.clone());
                features.insert("verb".to_string(), verb.clone());
                let mut positions = BTreeMap::new();
                for (i, noun) in triple.iter().enumerate() {
                    let pos = i as u8 + 1;
                    features.insert(format!("noun{pos}"), noun.clone());
                    positions.insert(
                        pos,
                        PositionFiller {
                            noun: noun.clone(),
                            verb: None,
                        },
                    );
                }
                records.push(SentenceRecord {
                    id: records.len(),
                    text: render_ditransitive(triple, adverb, verb),
                    features,
                    position_features: positions,
                });
            }
        }
    }
    Ok(records)
}

/// Number of unordered pairs of `n` items.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}
