//! Pairwise cosine similarities, their standardization, and dissimilarity
//! matrix export.
//!
//! # Binary dissimilarity layout (`dissim.bin`)
//!
//! All integers and floats little-endian:
//!
//! | offset        | size     | content                                  |
//! |---------------|----------|------------------------------------------|
//! | 0             | 8        | magic `SPDISSIM`                         |
//! | 8             | 4        | format version, `u32` = 1                |
//! | 12            | 8        | `n`, number of sentences, `u64`          |
//! | 20            | 8·n      | sentence ids, `u64` each                 |
//! | 20 + 8·n      | 8·n·n    | `1 - cosine`, `f64`, row-major, n×n      |
//!
//! The matrix is symmetric with an exact zero diagonal.

use std::collections::HashMap;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::corpus::SentenceRecord;
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, mean};

pub const DISSIM_MAGIC: &[u8; 8] = b"SPDISSIM";
pub const DISSIM_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityRecord {
    /// Sentence ids, `a < b`.
    pub pair: (usize, usize),
    pub cosine: f64,
    pub z: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Standardizes with the sample (n - 1) standard deviation.
pub fn zscore(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::ZeroVariance(format!(
            "need at least 2 values, got {}",
            values.len()
        )));
    }
    let m = mean(values);
    let ss = compensated_sum(values.iter().map(|v| (v - m) * (v - m)));
    let sd = (ss / (values.len() - 1) as f64).sqrt();
    // Rounding in the mean leaves a tiny spread even for constant input.
    let scale = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if sd.is_nan() || sd <= 1e-12 * scale || !sd.is_finite() {
        return Err(Error::ZeroVariance(format!(
            "standard deviation of {} values is {sd}",
            values.len()
        )));
    }
    Ok(values.iter().map(|v| (v - m) / sd).collect())
}

fn lookup<'a>(
    corpus: &[SentenceRecord],
    embeddings: &'a HashMap<String, Vec<f64>>,
) -> Result<Vec<&'a [f64]>> {
    let vectors: Vec<&[f64]> = corpus
        .iter()
        .map(|s| {
            embeddings
                .get(&s.text)
                .map(Vec::as_slice)
                .ok_or_else(|| Error::MissingEmbedding {
                    id: s.id,
                    text: s.text.clone(),
                })
        })
        .collect::<Result<_>>()?;
    if let Some(first) = vectors.first() {
        if let Some(bad) = vectors.iter().find(|v| v.len() != first.len()) {
            return Err(Error::DimensionMismatch {
                expected: first.len(),
                actual: bad.len(),
            });
        }
    }
    Ok(vectors)
}

/// Cosine of every unordered pair, in [`crate::paircode::pair_indices`]
/// order.
pub fn pairwise_cosines(
    corpus: &[SentenceRecord],
    embeddings: &HashMap<String, Vec<f64>>,
) -> Result<Vec<f64>> {
    let vectors = lookup(corpus, embeddings)?;
    let n = vectors.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| cosine(vectors[i], vectors[j]))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// One record per unordered pair, z-scored over exactly this corpus's pairs.
pub fn similarity_table(
    corpus: &[SentenceRecord],
    embeddings: &HashMap<String, Vec<f64>>,
) -> Result<Vec<SimilarityRecord>> {
    let cosines = pairwise_cosines(corpus, embeddings)?;
    let z = zscore(&cosines)?;
    let n = corpus.len();
    let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
    Ok(pairs
        .zip(cosines.into_iter().zip(z))
        .map(|((a, b), (cosine, z))| SimilarityRecord {
            pair: (corpus[a].id, corpus[b].id),
            cosine,
            z,
        })
        .collect())
}

/// Dense `1 - cosine` matrix with its sentence ids.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    pub ids: Vec<u64>,
    /// Row-major, `ids.len()` squared entries.
    pub values: Vec<f64>,
}

impl DissimilarityMatrix {
    pub fn from_records(ids: &[usize], records: &[SimilarityRecord]) -> Result<Self> {
        let n = ids.len();
        if records.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::DimensionMismatch {
                expected: n * n.saturating_sub(1) / 2,
                actual: records.len(),
            });
        }
        let index: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut values = vec![0.0; n * n];
        for r in records {
            let (Some(&i), Some(&j)) = (index.get(&r.pair.0), index.get(&r.pair.1)) else {
                return Err(Error::Parse(format!("pair {:?} refers to unknown ids", r.pair)));
            };
            let d = 1.0 - r.cosine;
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
        Ok(DissimilarityMatrix {
            ids: ids.iter().map(|&i| i as u64).collect(),
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(DISSIM_MAGIC)?;
        out.write_all(&DISSIM_VERSION.to_le_bytes())?;
        out.write_all(&(self.len() as u64).to_le_bytes())?;
        for id in &self.ids {
            out.write_all(&id.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
        out.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != DISSIM_MAGIC {
            return Err(Error::Parse("not a dissimilarity matrix file".into()));
        }
        let mut b4 = [0u8; 4];
        input.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != DISSIM_VERSION {
            return Err(Error::Parse(format!("unsupported dissimilarity format version {version}")));
        }
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b8)?;
        let n = usize::try_from(u64::from_le_bytes(b8))
            .map_err(|_| Error::Parse("matrix size overflows".into()))?;
        let mut ids = Vec::with_capacity(n);
        for _ in 0..n {
            input.read_exact(&mut b8)?;
            ids.push(u64::from_le_bytes(b8));
        }
        let mut raw = vec![0u8; n * n * 8];
        input.read_exact(&mut raw)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(DissimilarityMatrix { ids, values })
    }

    /// Tab-separated text: a header row of ids (first cell `id`), then one
    /// row per sentence.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "id")?;
        for id in &self.ids {
            write!(out, "\t{id}")?;
        }
        writeln!(out)?;
        for (i, id) in self.ids.iter().enumerate() {
            write!(out, "{id}")?;
            for j in 0..self.len() {
                write!(out, "\t{}", self.get(i, j))?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}
