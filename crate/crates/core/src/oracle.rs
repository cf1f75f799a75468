//! Additive synthetic encoder with planted feature weights.
//!
//! A sentence embeds as
//!
//! ```text
//! e = sum over features (slot, filler) of sqrt(w(slot)) * u(space(slot), filler) + noise
//! ```
//!
//! where `u` is a unit vector drawn from a generator seeded by a hash of
//! `(seed, space, filler)`. Directions for different fillers are nearly
//! orthogonal at high dimension, so the dot product of two embeddings is
//! close to the summed weight of the features they share. Scaling by the
//! square root makes a slot's contribution to the cosine proportional to its
//! weight, so a planted 2:1 weight ratio shows up as a 2:1 coefficient ratio.
//!
//! A slot's space defaults to its own name. Mapping several slots to one
//! space (say `noun1`, `noun2`, `noun3` to `noun`) makes the oracle blind to
//! which position a filler occupies.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::SentenceRecord;
use crate::error::{Error, Result};

pub const MIN_DIMENSION: usize = 8;
pub const ID_PREFIX: &str = "oracle:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    /// Short name used in the encoder id; anonymous specs are identified by
    /// a hash of their parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    #[serde(default)]
    pub slot_weights: BTreeMap<String, f64>,
    /// Weight of slots not listed in `slot_weights`.
    #[serde(default)]
    pub default_weight: f64,
    /// Slot name to direction space; unlisted slots use their own name.
    #[serde(default)]
    pub spaces: BTreeMap<String, String>,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub seed: u64,
}

pub const PRESETS: [&str; 3] = ["equal-weights", "subject-bias", "participant-set"];

impl OracleSpec {
    pub fn new(dimension: usize) -> Self {
        OracleSpec {
            name: None,
            dimension,
            slot_weights: BTreeMap::new(),
            default_weight: 1.0,
            spaces: BTreeMap::new(),
            noise_sd: 0.0,
            seed: 0,
        }
    }

    pub fn with_weight(mut self, slot: &str, weight: f64) -> Self {
        self.slot_weights.insert(slot.into(), weight);
        self
    }

    pub fn with_space(mut self, slot: &str, space: &str) -> Self {
        self.spaces.insert(slot.into(), space.into());
        self
    }

    /// Named configurations available as `oracle:<name>`.
    ///
    /// * `equal-weights`: every feature weighs 1, no noise.
    /// * `subject-bias`: subject 2, predicate 1, everything else 0.5, light noise.
    /// * `participant-set`: nouns share one space and verbs another, so only
    ///   the set of participants matters and not their positions.
    pub fn preset(name: &str) -> Option<OracleSpec> {
        let base = OracleSpec::new(1024);
        let mut spec = match name {
            "equal-weights" => base,
            "subject-bias" => {
                let mut s = base.with_weight("subj", 2.0).with_weight("verb", 1.0);
                s.default_weight = 0.5;
                s.noise_sd = 0.01;
                s
            }
            "participant-set" => {
                let mut s = base;
                for slot in ["subj", "obj", "noun1", "noun2", "noun3"] {
                    s = s.with_space(slot, "noun");
                }
                for slot in ["verb", "verb1", "verb2", "verb3"] {
                    s = s.with_space(slot, "verb");
                }
                s
            }
            _ => return None,
        };
        spec.name = Some(name.into());
        Some(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < MIN_DIMENSION {
            return Err(Error::config(format!(
                "oracle dimension {} is below the minimum of {MIN_DIMENSION}",
                self.dimension
            )));
        }
        let weights = self.slot_weights.values().chain([&self.default_weight]);
        for w in weights {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::config(format!("oracle weight {w} is not a finite non-negative number")));
            }
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return Err(Error::config(format!("oracle noise_sd {} is invalid", self.noise_sd)));
        }
        Ok(())
    }

    /// `oracle:<name>`, or `oracle:<first 16 hex digits of the SHA-256 of its JSON form>`.
    pub fn encoder_id(&self) -> String {
        match &self.name {
            Some(name) => format!("{ID_PREFIX}{name}"),
            None => format!("{ID_PREFIX}{}", self.hash_hex()),
        }
    }

    fn hash_hex(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("spec serializes");
        let digest = Sha256::digest(&canonical);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn weight(&self, slot: &str) -> f64 {
        self.slot_weights
            .get(slot)
            .copied()
            .unwrap_or(self.default_weight)
    }

    pub fn space<'a>(&'a self, slot: &'a str) -> &'a str {
        self.spaces.get(slot).map_or(slot, String::as_str)
    }
}

fn seeded_rng(parts: &[&[u8]]) -> Xoshiro256PlusPlus {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    Xoshiro256PlusPlus::from_seed(h.finalize().into())
}

fn gaussian(rng: &mut Xoshiro256PlusPlus, dimension: usize) -> Vec<f64> {
    (0..dimension).map(|_| rng.sample(StandardNormal)).collect()
}

/// Unit direction for `filler` in `space`.
pub fn direction(seed: u64, space: &str, filler: &str, dimension: usize) -> Vec<f64> {
    let mut rng = seeded_rng(&[b"direction", &seed.to_le_bytes(), space.as_bytes(), filler.as_bytes()]);
    let mut v = gaussian(&mut rng, dimension);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Embeds sentences, reusing filler directions across the batch.
pub struct OracleEmbedder<'a> {
    spec: &'a OracleSpec,
    directions: HashMap<(String, String), Vec<f64>>,
}

impl<'a> OracleEmbedder<'a> {
    pub fn new(spec: &'a OracleSpec) -> Result<Self> {
        spec.validate()?;
        Ok(OracleEmbedder {
            spec,
            directions: HashMap::new(),
        })
    }

    pub fn embed(&mut self, sentence: &SentenceRecord) -> Vec<f64> {
        let spec = self.spec;
        let mut out = vec![0.0; spec.dimension];
        for (slot, filler) in &sentence.features {
            let w = spec.weight(slot);
            if w == 0.0 {
                continue;
            }
            let space = spec.space(slot);
            let u = self
                .directions
                .entry((space.to_string(), filler.clone()))
                .or_insert_with(|| direction(spec.seed, space, filler, spec.dimension));
            let scale = w.sqrt();
            for (o, x) in out.iter_mut().zip(u.iter()) {
                *o += scale * x;
            }
        }
        if spec.noise_sd > 0.0 {
            // Noise is keyed on the text so a text always embeds identically.
            let mut rng = seeded_rng(&[b"noise", &spec.seed.to_le_bytes(), sentence.text.as_bytes()]);
            for (o, z) in out.iter_mut().zip(gaussian(&mut rng, spec.dimension)) {
                *o += spec.noise_sd * z;
            }
        }
        out
    }
}

pub fn embed_synthetic(sentence: &SentenceRecord, spec: &OracleSpec) -> Result<Vec<f64>> {
    Ok(OracleEmbedder::new(spec)?.embed(sentence))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::cosine;

    fn sentence(text: &str, features: &[(&str, &str)]) -> SentenceRecord {
        SentenceRecord {
            id: 0,
            text: text.into(),
            features: features
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            position_features: BTreeMap::new(),
        }
    }

    #[test]
    fn identical_features_give_cosine_one() {
        let spec = OracleSpec::new(64);
        let a = sentence("x", &[("subj", "cat"), ("verb", "moves")]);
        let b = sentence("y", &[("subj", "cat"), ("verb", "moves")]);
        let (ea, eb) = (embed_synthetic(&a, &spec).unwrap(), embed_synthetic(&b, &spec).unwrap());
        assert!((cosine(&ea, &eb).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_bytes() {
        let mut spec = OracleSpec::new(32);
        spec.noise_sd = 0.3;
        let s = sentence("The cat moves.", &[("subj", "cat")]);
        let a = embed_synthetic(&s, &spec).unwrap();
        let b = embed_synthetic(&s, &spec).unwrap();
        assert_eq!(
            a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
        spec.seed = 1;
        assert_ne!(a, embed_synthetic(&s, &spec).unwrap());
    }

    #[test]
    fn directions_are_unit_and_nearly_orthogonal() {
        let a = direction(0, "subj", "cat", 4096);
        let b = direction(0, "subj", "dog", 4096);
        let c = direction(0, "obj", "cat", 4096);
        let norm: f64 = a.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        // Dot products of independent unit vectors have sd 1/64 here.
        assert!(cosine(&a, &b).unwrap().abs() < 0.1);
        assert!(cosine(&a, &c).unwrap().abs() < 0.1);
    }

    #[test]
    fn shared_space_ignores_position() {
        let spec = OracleSpec::new(256)
            .with_space("noun1", "noun")
            .with_space("noun2", "noun");
        let a = sentence("a", &[("noun1", "cat"), ("noun2", "dog")]);
        let b = sentence("b", &[("noun1", "dog"), ("noun2", "cat")]);
        let c = cosine(&embed_synthetic(&a, &spec).unwrap(), &embed_synthetic(&b, &spec).unwrap());
        assert!((c.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_slots_are_ignored() {
        let spec = OracleSpec::new(64).with_weight("punct", 0.0);
        let a = sentence("a", &[("subj", "cat"), ("punct", ".")]);
        let b = sentence("b", &[("subj", "cat"), ("punct", "!")]);
        let c = cosine(&embed_synthetic(&a, &spec).unwrap(), &embed_synthetic(&b, &spec).unwrap());
        assert!((c.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ids_and_validation() {
        assert_eq!(OracleSpec::preset("equal-weights").unwrap().encoder_id(), "oracle:equal-weights");
        for p in PRESETS {
            OracleSpec::preset(p).unwrap().validate().unwrap();
        }
        assert!(OracleSpec::preset("nope").is_none());

        let anon = OracleSpec::new(16).with_weight("subj", 2.0);
        let id = anon.encoder_id();
        assert_eq!(id.len(), ID_PREFIX.len() + 16);
        assert_eq!(id, anon.clone().encoder_id());
        assert_ne!(id, OracleSpec::new(16).encoder_id());

        assert!(OracleSpec::new(4).validate().is_err());
        assert!(OracleSpec::new(16).with_weight("subj", -1.0).validate().is_err());
        assert!(OracleSpec::new(16).with_weight("subj", f64::NAN).validate().is_err());
    }
}
