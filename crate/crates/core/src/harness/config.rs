//! Experiment configurations: built-in definitions for every case study and
//! its replication, and TOML files for custom ones.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{lexicon, CorpusSpec};
use crate::error::{Error, Result};
use crate::oracle::{self, OracleSpec};
use crate::paircode::{Coding, OverlapKind, PredictorSchema};

pub const BUILTIN_NAMES: [&str; 12] = [
    "intransitive-v1",
    "intransitive-r2",
    "transitive-v1",
    "transitive-r2",
    "modifiers-v1",
    "modifiers-r2",
    "coordvp-v1",
    "coordvp-r2",
    "gerund-v1",
    "gerund-r2",
    "ditransitive-v1",
    "ditransitive-r2",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    /// Name of a larger model whose predictors include all of these; the
    /// report then shows the R² gained by the larger model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nested_in: Option<String>,
    pub predictors: Vec<PredictorSchema>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Encoder ids: `oracle:<name>` or a model name served at the endpoint.
    #[serde(default)]
    pub encoders: Vec<String>,
    /// Sentence count reported for the original study, when known. A
    /// different regenerated count is flagged in reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_sentence_count: Option<usize>,
    pub corpus: CorpusSpec,
    pub models: Vec<ModelSpec>,
    /// Oracle encoders defined by this config, addressable as
    /// `oracle:<name>`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub oracles: Vec<OracleSpec>,
}

fn model(name: &str, predictors: Vec<PredictorSchema>) -> ModelSpec {
    ModelSpec {
        name: name.into(),
        nested_in: None,
        predictors,
    }
}

fn subj_obj() -> PredictorSchema {
    PredictorSchema::new(
        "SubjObj",
        Coding::SubjObj {
            subject: "subj".into(),
            object: "obj".into(),
        },
    )
}

fn intransitive_models() -> Vec<ModelSpec> {
    vec![model(
        "main",
        vec![
            PredictorSchema::same("SameDet", "det"),
            PredictorSchema::same("SameAdv", "adv"),
            PredictorSchema::same("SamePred", "verb"),
            PredictorSchema::same("SamePunct", "punct"),
            PredictorSchema::same("SameSubj", "subj"),
        ],
    )]
}

fn transitive_models() -> Vec<ModelSpec> {
    vec![model(
        "main",
        vec![
            PredictorSchema::same("SameAdv", "adv"),
            PredictorSchema::same("SamePred", "verb"),
            subj_obj(),
        ],
    )]
}

fn modifier_models() -> Vec<ModelSpec> {
    vec![model(
        "main",
        vec![
            PredictorSchema::same("SameMod", "mod"),
            PredictorSchema::same("SameAdv", "adv"),
            PredictorSchema::same("SamePred", "verb"),
            subj_obj(),
        ],
    )]
}

fn overlap(name: &str, of: OverlapKind, minus: u32) -> PredictorSchema {
    PredictorSchema::new(name, Coding::Overlap { of, minus })
}

fn coordinated_models() -> Vec<ModelSpec> {
    let positions = ["V1Same", "V2Same", "V3Same", "N1Same", "N2Same", "N3Same"]
        .iter()
        .map(|name| {
            let slot = format!("{}{}", if name.starts_with('V') { "verb" } else { "noun" }, &name[1..2]);
            PredictorSchema::same(name, &slot)
        })
        .collect();
    let overlaps = vec![
        overlap("VerbOverlap", OverlapKind::Verb, 0),
        overlap("NounOverlap", OverlapKind::Noun, 0),
    ];
    let mut with_trigram = overlaps.clone();
    with_trigram.push(PredictorSchema::new(
        "TrigramRes",
        Coding::Residualized {
            source: Box::new(Coding::Overlap {
                of: OverlapKind::Trigram,
                minus: 0,
            }),
            covariates: vec!["VerbOverlap".into(), "NounOverlap".into()],
        },
    ));
    vec![
        model("positions", positions),
        ModelSpec {
            nested_in: Some("overlap-trigram".into()),
            ..model("overlap", overlaps)
        },
        model("overlap-trigram", with_trigram),
    ]
}

fn gerund_models(pronouns: &[&str]) -> Vec<ModelSpec> {
    vec![model(
        "main",
        vec![
            PredictorSchema::same("SameSubj", "subj"),
            PredictorSchema::same("SameCop", "cop"),
            PredictorSchema::same("SameAdj", "adj"),
            PredictorSchema::same("SamePred", "pred"),
            PredictorSchema::new(
                "SameObj",
                Coding::ObjectKind {
                    slot: "obj".into(),
                    pronouns: pronouns.iter().map(|p| p.to_string()).collect(),
                },
            ),
        ],
    )]
}

fn ditransitive_models() -> Vec<ModelSpec> {
    let base = vec![
        PredictorSchema::same("SameAdv", "adv"),
        PredictorSchema::same("SamePred", "verb"),
        overlap("Overlap", OverlapKind::Noun, 1),
    ];
    let mut full = base.clone();
    full.push(PredictorSchema::new(
        "SPCRes",
        Coding::Residualized {
            source: Box::new(Coding::SamePosCount),
            covariates: vec!["Overlap".into()],
        },
    ));
    vec![
        model("main", full),
        ModelSpec {
            nested_in: Some("main".into()),
            ..model("without-SPCRes", base)
        },
    ]
}

impl ExperimentConfig {
    pub fn builtin(name: &str) -> Option<ExperimentConfig> {
        let cart = |template| CorpusSpec::Cartesian { template };
        let (corpus, models, published) = match name {
            "intransitive-v1" => (cart(lexicon::intransitive_v1()), intransitive_models(), Some(256)),
            "intransitive-r2" => (cart(lexicon::intransitive_r2()), intransitive_models(), Some(256)),
            "transitive-v1" => (cart(lexicon::transitive_v1()), transitive_models(), Some(672)),
            "transitive-r2" => (cart(lexicon::transitive_r2()), transitive_models(), None),
            "modifiers-v1" => (cart(lexicon::modifiers_v1()), modifier_models(), Some(1440)),
            "modifiers-r2" => (cart(lexicon::modifiers_r2()), modifier_models(), None),
            "coordvp-v1" => (lexicon::coordinated_v1(), coordinated_models(), Some(400)),
            "coordvp-r2" => (lexicon::coordinated_r2(), coordinated_models(), None),
            "gerund-v1" => (cart(lexicon::gerund_v1()), gerund_models(&["it", "them"]), Some(1024)),
            "gerund-r2" => (cart(lexicon::gerund_r2()), gerund_models(&["him", "me"]), None),
            "ditransitive-v1" => (lexicon::ditransitive_v1(), ditransitive_models(), Some(540)),
            "ditransitive-r2" => (lexicon::ditransitive_r2(), ditransitive_models(), None),
            _ => return None,
        };
        Some(ExperimentConfig {
            name: name.into(),
            seed: 0,
            encoders: vec!["oracle:equal-weights".into()],
            published_sentence_count: published,
            corpus,
            models,
            oracles: Vec::new(),
        })
    }

    /// A built-in name, or a path to a TOML file.
    pub fn resolve(name_or_path: &str) -> Result<ExperimentConfig> {
        if let Some(cfg) = Self::builtin(name_or_path) {
            return Ok(cfg);
        }
        let path = Path::new(name_or_path);
        if path.exists() {
            return Self::load(path);
        }
        Err(Error::config(format!(
            "`{name_or_path}` is neither a built-in experiment ({}) nor a readable file",
            BUILTIN_NAMES.join(", ")
        )))
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        let cfg = Self::from_toml(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn model(&self, name: &str) -> Option<&ModelSpec> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::config(format!("experiment `{}` defines no models", self.name)));
        }
        let mut names = HashSet::new();
        for m in &self.models {
            if !names.insert(m.name.as_str()) {
                return Err(Error::config(format!("model `{}` defined twice", m.name)));
            }
        }
        for m in &self.models {
            let Some(parent) = &m.nested_in else { continue };
            let parent = self.model(parent).ok_or_else(|| {
                Error::config(format!("model `{}` is nested in unknown model `{parent}`", m.name))
            })?;
            for p in &m.predictors {
                if !parent.predictors.contains(p) {
                    return Err(Error::NotNested(format!(
                        "predictor `{}` of `{}` is not in `{}`",
                        p.name, m.name, parent.name
                    )));
                }
            }
        }
        let mut oracle_names = HashSet::new();
        for o in &self.oracles {
            o.validate()?;
            let Some(name) = &o.name else {
                return Err(Error::config("oracles defined in a config need a name"));
            };
            if !oracle_names.insert(name.as_str()) {
                return Err(Error::config(format!("oracle `{name}` defined twice")));
            }
        }
        Ok(())
    }

    /// Oracle spec for an `oracle:*` encoder id: config-defined oracles
    /// first, then presets. `None` for non-oracle ids.
    pub fn oracle(&self, encoder_id: &str) -> Option<Result<OracleSpec>> {
        let name = encoder_id.strip_prefix(oracle::ID_PREFIX)?;
        if let Some(spec) = self.oracles.iter().find(|o| o.name.as_deref() == Some(name)) {
            return Some(Ok(spec.clone()));
        }
        Some(OracleSpec::preset(name).ok_or_else(|| {
            Error::config(format!(
                "unknown oracle `{name}`; define it under [[oracles]] or use one of {}",
                oracle::PRESETS.join(", ")
            ))
        }))
    }
}
