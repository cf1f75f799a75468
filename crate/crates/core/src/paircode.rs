//! Sentence-pair predictors and design-matrix assembly.
//!
//! Every unordered pair `(a, b)` with `a.id < b.id` becomes one row. Codings
//! read slot fillers and position features from the records; fillers are
//! compared as whole strings.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::SentenceRecord;
use crate::error::{Error, Result};
use crate::regress;

pub const INTERCEPT: &str = "(Intercept)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapKind {
    Noun,
    Verb,
    /// Shared "verb the noun" phrases.
    Trigram,
}

/// Seven-way subject/object identity code. `A`/`B` name the first sentence's
/// subject/object; the two characters give what the second sentence has in
/// its subject and object slot respectively (`0`: neither).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubjObj {
    None,
    A0,
    ZeroB,
    ZeroA,
    B0,
    BA,
    AB,
}

impl SubjObj {
    /// Level order used for dummy columns; the first entry is the baseline.
    pub const LEVELS: [SubjObj; 7] = [
        SubjObj::None,
        SubjObj::ZeroA,
        SubjObj::ZeroB,
        SubjObj::A0,
        SubjObj::AB,
        SubjObj::B0,
        SubjObj::BA,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SubjObj::None => "00",
            SubjObj::A0 => "A0",
            SubjObj::ZeroB => "0B",
            SubjObj::ZeroA => "0A",
            SubjObj::B0 => "B0",
            SubjObj::BA => "BA",
            SubjObj::AB => "AB",
        }
    }

    /// The code of the same pair read in the opposite order.
    pub fn reversed(self) -> SubjObj {
        match self {
            SubjObj::ZeroA => SubjObj::B0,
            SubjObj::B0 => SubjObj::ZeroA,
            other => other,
        }
    }

    fn index(self) -> usize {
        Self::LEVELS.iter().position(|&l| l == self).unwrap()
    }
}

impl fmt::Display for SubjObj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectMatch {
    Different,
    SamePronoun,
    SameNoun,
}

impl ObjectMatch {
    pub const LEVELS: [ObjectMatch; 3] = [
        ObjectMatch::Different,
        ObjectMatch::SamePronoun,
        ObjectMatch::SameNoun,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ObjectMatch::Different => "different",
            ObjectMatch::SamePronoun => "same_pronoun",
            ObjectMatch::SameNoun => "same_noun",
        }
    }

    fn column_suffix(self) -> &'static str {
        match self {
            ObjectMatch::Different => "Diff",
            ObjectMatch::SamePronoun => "Pron",
            ObjectMatch::SameNoun => "Noun",
        }
    }

    fn index(self) -> usize {
        Self::LEVELS.iter().position(|&l| l == self).unwrap()
    }
}

/// How a predictor is computed from a sentence pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "coding", rename_all = "snake_case")]
pub enum Coding {
    /// 1 iff both sentences have the same filler in `slot`.
    Same { slot: String },
    SubjObj { subject: String, object: String },
    ObjectKind { slot: String, pronouns: Vec<String> },
    /// Overlap of position features, minus a constant offset.
    Overlap {
        of: OverlapKind,
        #[serde(default, skip_serializing_if = "is_zero")]
        minus: u32,
    },
    /// Number of positions holding the same noun in both sentences.
    SamePosCount,
    /// Residuals of `source` regressed (with intercept) on the named
    /// predictors, which must precede this one in the schema.
    Residualized {
        source: Box<Coding>,
        covariates: Vec<String>,
    },
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredictorKind {
    Binary,
    Categorical {
        levels: Vec<String>,
        baseline: String,
    },
    Count,
    Residualized {
        source: Box<PredictorKind>,
        covariates: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorSchema {
    pub name: String,
    #[serde(flatten)]
    pub coding: Coding,
}

impl PredictorSchema {
    pub fn new(name: &str, coding: Coding) -> Self {
        PredictorSchema {
            name: name.to_string(),
            coding,
        }
    }

    pub fn same(name: &str, slot: &str) -> Self {
        Self::new(
            name,
            Coding::Same {
                slot: slot.to_string(),
            },
        )
    }

    pub fn kind(&self) -> PredictorKind {
        self.coding.kind()
    }

    pub fn source_slots(&self) -> Vec<String> {
        self.coding.source_slots()
    }

    /// Names of the design columns this predictor expands to.
    pub fn column_names(&self) -> Vec<String> {
        match &self.coding {
            Coding::SubjObj { .. } => SubjObj::LEVELS[1..]
                .iter()
                .map(|l| format!("{}_{}", self.name, l.label()))
                .collect(),
            Coding::ObjectKind { .. } => ObjectMatch::LEVELS[1..]
                .iter()
                .map(|l| format!("{}{}", self.name, l.column_suffix()))
                .collect(),
            _ => vec![self.name.clone()],
        }
    }
}

impl Coding {
    pub fn kind(&self) -> PredictorKind {
        match self {
            Coding::Same { .. } => PredictorKind::Binary,
            Coding::SubjObj { .. } => PredictorKind::Categorical {
                levels: SubjObj::LEVELS.iter().map(|l| l.label().to_string()).collect(),
                baseline: SubjObj::None.label().to_string(),
            },
            Coding::ObjectKind { .. } => PredictorKind::Categorical {
                levels: ObjectMatch::LEVELS
                    .iter()
                    .map(|l| l.label().to_string())
                    .collect(),
                baseline: ObjectMatch::Different.label().to_string(),
            },
            Coding::Overlap { .. } | Coding::SamePosCount => PredictorKind::Count,
            Coding::Residualized { source, covariates } => PredictorKind::Residualized {
                source: Box::new(source.kind()),
                covariates: covariates.clone(),
            },
        }
    }

    pub fn source_slots(&self) -> Vec<String> {
        match self {
            Coding::Same { slot } | Coding::ObjectKind { slot, .. } => vec![slot.clone()],
            Coding::SubjObj { subject, object } => vec![subject.clone(), object.clone()],
            Coding::Overlap { .. } | Coding::SamePosCount => Vec::new(),
            Coding::Residualized { source, .. } => source.source_slots(),
        }
    }

    fn uses_positions(&self) -> bool {
        match self {
            Coding::Overlap { .. } | Coding::SamePosCount => true,
            Coding::Residualized { source, .. } => source.uses_positions(),
            _ => false,
        }
    }

    /// Number of raw values this coding contributes per row.
    fn width(&self) -> usize {
        match self {
            Coding::SubjObj { .. } => SubjObj::LEVELS.len() - 1,
            Coding::ObjectKind { .. } => ObjectMatch::LEVELS.len() - 1,
            _ => 1,
        }
    }

    /// Appends this coding's row values for the pair to `row`.
    fn encode(&self, a: &SentenceRecord, b: &SentenceRecord, row: &mut Vec<f64>) -> Result<()> {
        match self {
            Coding::Same { slot } => row.push(f64::from(code_binary(a, b, slot)?)),
            Coding::SubjObj { subject, object } => {
                let idx = code_subjobj(a, b, subject, object)?.index();
                row.extend((1..SubjObj::LEVELS.len()).map(|l| f64::from(u8::from(l == idx))));
            }
            Coding::ObjectKind { slot, pronouns } => {
                let idx = code_object_kind(a, b, slot, pronouns)?.index();
                row.extend((1..ObjectMatch::LEVELS.len()).map(|l| f64::from(u8::from(l == idx))));
            }
            Coding::Overlap { of, minus } => {
                let overlap = code_overlap(a, b, *of)?;
                let value = overlap.checked_sub(*minus).ok_or_else(|| {
                    Error::Coding(format!(
                        "pair ({}, {}): overlap {overlap} is below the offset {minus}",
                        a.id, b.id
                    ))
                })?;
                row.push(f64::from(value));
            }
            Coding::SamePosCount => row.push(f64::from(code_samepos_count(a, b)?)),
            Coding::Residualized { source, .. } => source.encode(a, b, row)?,
        }
        Ok(())
    }
}

fn slot<'a>(r: &'a SentenceRecord, slot: &str) -> Result<&'a str> {
    r.feature(slot)
        .ok_or_else(|| Error::schema(format!("sentence {} has no slot `{slot}`", r.id)))
}

pub fn code_binary(a: &SentenceRecord, b: &SentenceRecord, slot_name: &str) -> Result<u8> {
    Ok(u8::from(slot(a, slot_name)? == slot(b, slot_name)?))
}

pub fn code_subjobj(
    a: &SentenceRecord,
    b: &SentenceRecord,
    subject: &str,
    object: &str,
) -> Result<SubjObj> {
    let (s1, o1) = (slot(a, subject)?, slot(a, object)?);
    let (s2, o2) = (slot(b, subject)?, slot(b, object)?);
    let same_subj = s1 == s2;
    let same_obj = o1 == o2;
    let subj_to_obj = s1 == o2;
    let obj_to_subj = o1 == s2;
    let level = match (same_subj, same_obj, subj_to_obj, obj_to_subj) {
        (false, false, false, false) => SubjObj::None,
        (true, false, false, false) => SubjObj::A0,
        (false, true, false, false) => SubjObj::ZeroB,
        (false, false, true, false) => SubjObj::ZeroA,
        (false, false, false, true) => SubjObj::B0,
        (false, false, true, true) => SubjObj::BA,
        (true, true, false, false) => SubjObj::AB,
        _ => {
            return Err(Error::Coding(format!(
                "pair ({}, {}): subject/object identities match more than one level \
                 ({s1:?} {o1:?} / {s2:?} {o2:?})",
                a.id, b.id
            )))
        }
    };
    Ok(level)
}

/// Size of the multiset intersection of two item lists.
fn multiset_overlap<T: Eq + std::hash::Hash + Ord + Clone>(a: &[T], b: &[T]) -> u32 {
    let mut counts: BTreeMap<&T, i64> = BTreeMap::new();
    for x in a {
        *counts.entry(x).or_default() += 1;
    }
    let mut shared = 0;
    for x in b {
        if let Some(c) = counts.get_mut(x) {
            if *c > 0 {
                *c -= 1;
                shared += 1;
            }
        }
    }
    shared
}

fn require_positions(r: &SentenceRecord) -> Result<()> {
    if r.position_features.is_empty() {
        return Err(Error::schema(format!(
            "sentence {} has no position features",
            r.id
        )));
    }
    Ok(())
}

fn verbs(r: &SentenceRecord) -> Result<Vec<&str>> {
    r.position_verbs()
        .map(|v| v.ok_or_else(|| Error::schema(format!("sentence {} has no position verbs", r.id))))
        .collect()
}

pub fn code_overlap(a: &SentenceRecord, b: &SentenceRecord, kind: OverlapKind) -> Result<u32> {
    require_positions(a)?;
    require_positions(b)?;
    Ok(match kind {
        OverlapKind::Noun => {
            let na: Vec<&str> = a.position_nouns().collect();
            let nb: Vec<&str> = b.position_nouns().collect();
            multiset_overlap(&na, &nb)
        }
        OverlapKind::Verb => multiset_overlap(&verbs(a)?, &verbs(b)?),
        OverlapKind::Trigram => {
            let phrases = |r: &SentenceRecord| -> Result<Vec<(String, String)>> {
                Ok(verbs(r)?
                    .into_iter()
                    .zip(r.position_nouns())
                    .map(|(v, n)| (v.to_string(), n.to_string()))
                    .collect())
            };
            multiset_overlap(&phrases(a)?, &phrases(b)?)
        }
    })
}

pub fn code_samepos_count(a: &SentenceRecord, b: &SentenceRecord) -> Result<u32> {
    require_positions(a)?;
    require_positions(b)?;
    Ok(a.position_features
        .iter()
        .filter(|(pos, p)| b.position_features.get(pos).is_some_and(|q| q.noun == p.noun))
        .count() as u32)
}

fn is_noun_phrase(filler: &str) -> bool {
    ["the ", "a ", "an "]
        .iter()
        .any(|det| filler.starts_with(det) && filler.len() > det.len())
}

pub fn code_object_kind(
    a: &SentenceRecord,
    b: &SentenceRecord,
    slot_name: &str,
    pronouns: &[String],
) -> Result<ObjectMatch> {
    let (oa, ob) = (slot(a, slot_name)?, slot(b, slot_name)?);
    let classify = |o: &str, id: usize| -> Result<bool> {
        if pronouns.iter().any(|p| p == o) {
            Ok(true)
        } else if is_noun_phrase(o) {
            Ok(false)
        } else {
            Err(Error::config(format!(
                "sentence {id}: object {o:?} is neither a listed pronoun nor a noun phrase"
            )))
        }
    };
    let pron_a = classify(oa, a.id)?;
    classify(ob, b.id)?;
    Ok(if oa != ob {
        ObjectMatch::Different
    } else if pron_a {
        ObjectMatch::SamePronoun
    } else {
        ObjectMatch::SameNoun
    })
}

/// One predictor's columns within a [`DesignMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct DesignTerm {
    pub predictor: String,
    pub kind: PredictorKind,
    pub columns: Range<usize>,
}

#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub column_names: Vec<String>,
    /// Column-major values; column 0 is the intercept.
    pub columns: Vec<Vec<f64>>,
    /// Sentence ids of each row, `a < b`.
    pub pairs: Vec<(usize, usize)>,
    pub terms: Vec<DesignTerm>,
    pub response: Option<Vec<f64>>,
}

impl DesignMatrix {
    pub fn nrows(&self) -> usize {
        self.pairs.len()
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.column_names
            .iter()
            .position(|c| c == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn with_response(mut self, response: Vec<f64>) -> Result<Self> {
        if response.len() != self.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.nrows(),
                actual: response.len(),
            });
        }
        self.response = Some(response);
        Ok(self)
    }

    /// Tab-separated dump: `id_a`, `id_b`, every column, and `response` when
    /// present. Values use Rust's shortest round-trip float formatting.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "id_a\tid_b")?;
        for name in &self.column_names {
            write!(out, "\t{name}")?;
        }
        if self.response.is_some() {
            write!(out, "\tresponse")?;
        }
        writeln!(out)?;
        for (row, &(a, b)) in self.pairs.iter().enumerate() {
            write!(out, "{a}\t{b}")?;
            for col in &self.columns {
                write!(out, "\t{}", col[row])?;
            }
            if let Some(y) = &self.response {
                write!(out, "\t{}", y[row])?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// All unordered pairs `(i, j)`, `i < j`, in row-major order.
pub fn pair_indices(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

fn check_schema(corpus: &[SentenceRecord], schema: &[PredictorSchema]) -> Result<()> {
    let mut seen = HashSet::new();
    for p in schema {
        if !seen.insert(p.name.as_str()) {
            return Err(Error::schema(format!("predictor `{}` defined twice", p.name)));
        }
        if let Coding::Residualized { source, covariates } = &p.coding {
            if matches!(**source, Coding::Residualized { .. }) {
                return Err(Error::schema(format!(
                    "predictor `{}`: nested residualization is not supported",
                    p.name
                )));
            }
            if source.width() != 1 {
                return Err(Error::schema(format!(
                    "predictor `{}`: only single-column predictors can be residualized",
                    p.name
                )));
            }
            for c in covariates {
                if c == &p.name || !seen.contains(c.as_str()) {
                    return Err(Error::schema(format!(
                        "predictor `{}`: covariate `{c}` must be defined earlier in the schema",
                        p.name
                    )));
                }
            }
        }
        for r in corpus {
            for s in p.source_slots() {
                if r.feature(&s).is_none() {
                    return Err(Error::schema(format!(
                        "predictor `{}` reads slot `{s}`, missing in sentence {}",
                        p.name, r.id
                    )));
                }
            }
            if p.coding.uses_positions() && r.position_features.is_empty() {
                return Err(Error::schema(format!(
                    "predictor `{}` needs position features, missing in sentence {}",
                    p.name, r.id
                )));
            }
        }
    }
    Ok(())
}

/// Builds the intercept-first design matrix for every unordered pair of
/// `corpus`, expanding categoricals against their baselines and replacing
/// residualized predictors by their residuals. Fails if the result does not
/// have full column rank.
pub fn build_design(corpus: &[SentenceRecord], schema: &[PredictorSchema]) -> Result<DesignMatrix> {
    check_schema(corpus, schema)?;
    let n = corpus.len();
    let pairs = pair_indices(n);
    let width: usize = schema.iter().map(|p| p.coding.width()).sum();

    // Row-major raw values, one chunk per first sentence so rayon keeps order.
    let chunks: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let a = &corpus[i];
            let mut values = Vec::with_capacity((n - i - 1) * width);
            for b in &corpus[i + 1..] {
                if a.features == b.features && a.position_features == b.position_features {
                    return Err(Error::Coding(format!(
                        "sentences {} and {} have identical features",
                        a.id, b.id
                    )));
                }
                for p in schema {
                    p.coding.encode(a, b, &mut values)?;
                }
            }
            Ok(values)
        })
        .collect::<Result<_>>()?;

    let rows = pairs.len();
    let mut raw = vec![Vec::with_capacity(rows); width];
    for chunk in &chunks {
        for row in chunk.chunks_exact(width.max(1)) {
            for (col, &v) in raw.iter_mut().zip(row) {
                col.push(v);
            }
        }
    }
    drop(chunks);

    let mut column_names = vec![INTERCEPT.to_string()];
    let mut columns = vec![vec![1.0; rows]];
    let mut terms = Vec::with_capacity(schema.len());
    let mut raw_iter = raw.into_iter();
    for p in schema {
        let start = columns.len();
        let mut cols: Vec<Vec<f64>> = raw_iter.by_ref().take(p.coding.width()).collect();
        if let Coding::Residualized { covariates, .. } = &p.coding {
            let covs: Vec<&[f64]> = terms
                .iter()
                .filter(|t: &&DesignTerm| covariates.contains(&t.predictor))
                .flat_map(|t| t.columns.clone())
                .map(|c| columns[c].as_slice())
                .collect();
            let residual = regress::residualize(&cols[0], &covs)?;
            cols = vec![residual];
        }
        column_names.extend(p.column_names());
        columns.extend(cols);
        terms.push(DesignTerm {
            predictor: p.name.clone(),
            kind: p.kind(),
            columns: start..columns.len(),
        });
    }

    regress::check_rank(&column_names, &columns)?;
    Ok(DesignMatrix {
        column_names,
        columns,
        pairs,
        terms,
        response: None,
    })
}
