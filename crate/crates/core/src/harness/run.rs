//! The experiment pipeline: generate, embed, compare, code, fit, write.
//!
//! A run writes
//!
//! ```text
//! <runs>/<experiment>/config.toml
//! <runs>/<experiment>/<encoder>/corpus.txt   one JSON sentence record per line
//! <runs>/<experiment>/<encoder>/design.tsv   first model's design plus response
//! <runs>/<experiment>/<encoder>/fit.tsv      all model fits
//! <runs>/<experiment>/<encoder>/dissim.bin   1 - cosine matrix
//! ```
//!
//! Nothing in `fit.tsv` depends on wall-clock time or thread scheduling, so
//! the same config and embeddings give the same bytes.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::cache::EmbeddingCache;
use super::client::{EmbeddingClient, Encoder, HttpEncoder, OracleEncoder, DEFAULT_BATCH_SIZE};
use super::config::ExperimentConfig;
use crate::corpus::{pair_count, write_corpus, SentenceRecord};
use crate::error::{Error, Result};
use crate::paircode::{build_design, DesignMatrix};
use crate::regress::report::{FitTable, ModelReport};
use crate::regress::{compare_r2, fit_ols};
use crate::similarity::{similarity_table, DissimilarityMatrix, SimilarityRecord};

pub const CORPUS_FILE: &str = "corpus.txt";
pub const DESIGN_FILE: &str = "design.tsv";
pub const FIT_FILE: &str = "fit.tsv";
pub const DISSIM_FILE: &str = "dissim.bin";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Clone)]
pub struct RunOptions {
    pub runs_dir: PathBuf,
    pub endpoint: Option<String>,
    pub cache: Option<Arc<EmbeddingCache>>,
    pub batch_size: usize,
    /// The design dump is large for the bigger corpora.
    pub write_design: bool,
}

impl RunOptions {
    pub fn new(runs_dir: impl Into<PathBuf>) -> Self {
        RunOptions {
            runs_dir: runs_dir.into(),
            endpoint: None,
            cache: None,
            batch_size: DEFAULT_BATCH_SIZE,
            write_design: true,
        }
    }
}

#[derive(Debug)]
pub struct EncoderRun {
    pub encoder: String,
    pub dir: PathBuf,
    pub table: FitTable,
    pub similarities: Vec<SimilarityRecord>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub experiment: String,
    pub sentences: usize,
    pub pairs: usize,
    pub notes: Vec<String>,
    pub encoders: Vec<EncoderRun>,
}

/// Directory name for an encoder id: characters other than ASCII
/// alphanumerics, `-`, `_` and `.` become `_`.
pub fn encoder_dir_name(encoder: &str) -> String {
    encoder
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Notes about the corpus worth surfacing in every report.
pub fn corpus_notes(config: &ExperimentConfig, corpus: &[SentenceRecord]) -> Vec<String> {
    match config.published_sentence_count {
        Some(published) if published != corpus.len() => vec![format!(
            "generated {} sentences from the listed lexicon; the original study reports {published}",
            corpus.len()
        )],
        _ => Vec::new(),
    }
}

/// One design per model, in config order.
pub fn build_designs(config: &ExperimentConfig, corpus: &[SentenceRecord]) -> Result<Vec<DesignMatrix>> {
    config
        .models
        .iter()
        .map(|m| build_design(corpus, &m.predictors))
        .collect()
}

/// Fits every model to `response` and fills in R² gains for nested models.
pub fn fit_models(
    config: &ExperimentConfig,
    designs: &[DesignMatrix],
    response: &[f64],
) -> Result<Vec<ModelReport>> {
    let fits = config
        .models
        .iter()
        .zip(designs)
        .map(|(m, d)| Ok((m.name.clone(), fit_ols(d, Some(response))?)))
        .collect::<Result<Vec<_>>>()?;
    let by_name: HashMap<&str, usize> = fits.iter().enumerate().map(|(i, (n, _))| (n.as_str(), i)).collect();
    config
        .models
        .iter()
        .zip(&fits)
        .map(|(m, (name, fit))| {
            let delta = match &m.nested_in {
                Some(parent) => Some(compare_r2(&fits[by_name[parent.as_str()]].1, fit)?),
                None => None,
            };
            Ok(ModelReport {
                model: name.clone(),
                fit: fit.clone(),
                nested_in: m.nested_in.clone(),
                delta_r_squared: delta,
            })
        })
        .collect()
}

/// Similarity table and fits for one encoder's embeddings.
pub fn analyze(
    config: &ExperimentConfig,
    corpus: &[SentenceRecord],
    designs: &[DesignMatrix],
    embeddings: &HashMap<String, Vec<f64>>,
    encoder: &str,
) -> Result<(Vec<SimilarityRecord>, FitTable)> {
    let similarities = similarity_table(corpus, embeddings)?;
    let z: Vec<f64> = similarities.iter().map(|r| r.z).collect();
    let models = fit_models(config, designs, &z)?;
    let mut metadata = vec![
        ("format".to_string(), "simprobe fit v1".to_string()),
        ("experiment".to_string(), config.name.clone()),
        ("encoder".to_string(), encoder.to_string()),
        ("seed".to_string(), config.seed.to_string()),
        ("sentences".to_string(), corpus.len().to_string()),
        ("pairs".to_string(), pair_count(corpus.len()).to_string()),
    ];
    for note in corpus_notes(config, corpus) {
        metadata.push(("note".to_string(), note));
    }
    Ok((similarities, FitTable { metadata, models }))
}

fn make_encoder(
    config: &ExperimentConfig,
    id: &str,
    corpus: &[SentenceRecord],
    endpoint: Option<&str>,
) -> Result<Box<dyn Encoder>> {
    match config.oracle(id) {
        Some(spec) => Ok(Box::new(OracleEncoder::new(spec?, corpus)?)),
        None => Ok(Box::new(HttpEncoder::new(id, endpoint))),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Runs the whole pipeline for `encoders` (the config's list when empty).
pub fn run_experiment(config: &ExperimentConfig, encoders: &[String], opts: &RunOptions) -> Result<RunSummary> {
    config.validate()?;
    let encoders: Vec<String> = if encoders.is_empty() {
        config.encoders.clone()
    } else {
        encoders.to_vec()
    };
    if encoders.is_empty() {
        return Err(Error::config("no encoders requested"));
    }

    let corpus = config.corpus.generate(config.seed)?;
    let notes = corpus_notes(config, &corpus);
    for n in &notes {
        log::warn!("{}: {n}", config.name);
    }
    let texts: Vec<String> = corpus.iter().map(|r| r.text.clone()).collect();
    let built: Vec<Box<dyn Encoder>> = encoders
        .iter()
        .map(|id| make_encoder(config, id, &corpus, opts.endpoint.as_deref()))
        .collect::<Result<_>>()?;

    // Fetch for all encoders concurrently, then build the designs once.
    let client = EmbeddingClient::new(opts.cache.clone()).with_batch_size(opts.batch_size);
    let fetched: Vec<Result<HashMap<String, Vec<f64>>>> = std::thread::scope(|s| {
        let handles: Vec<_> = built
            .iter()
            .map(|enc| {
                let client = &client;
                let texts = &texts;
                s.spawn(move || client.fetch(enc.as_ref(), texts))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("embedding thread panicked"))
            .collect()
    });
    let embeddings = fetched.into_iter().collect::<Result<Vec<_>>>()?;
    let designs = build_designs(config, &corpus)?;

    let exp_dir = opts.runs_dir.join(&config.name);
    std::fs::create_dir_all(&exp_dir)?;
    std::fs::write(exp_dir.join(CONFIG_FILE), config.to_toml()?)?;

    let mut results = Vec::with_capacity(encoders.len());
    for (id, emb) in encoders.iter().zip(&embeddings) {
        let (similarities, table) = analyze(config, &corpus, &designs, emb, id)?;
        let dir = exp_dir.join(encoder_dir_name(id));
        std::fs::create_dir_all(&dir)?;
        write_corpus(create(&dir.join(CORPUS_FILE))?, &corpus)?;
        if opts.write_design {
            let z: Vec<f64> = similarities.iter().map(|r| r.z).collect();
            designs[0].clone().with_response(z)?.write_tsv(create(&dir.join(DESIGN_FILE))?)?;
        }
        std::fs::write(dir.join(FIT_FILE), table.to_tsv())?;
        let ids: Vec<usize> = corpus.iter().map(|r| r.id).collect();
        DissimilarityMatrix::from_records(&ids, &similarities)?.write_binary(create(&dir.join(DISSIM_FILE))?)?;
        log::info!("{}: wrote {}", config.name, dir.display());
        results.push(EncoderRun {
            encoder: id.clone(),
            dir,
            table,
            similarities,
        });
    }

    Ok(RunSummary {
        experiment: config.name.clone(),
        sentences: corpus.len(),
        pairs: pair_count(corpus.len()),
        notes,
        encoders: results,
    })
}

/// Reads `fit.tsv` from a run directory (or the file itself).
pub fn load_fit_table(path: &Path) -> Result<FitTable> {
    let file = if path.is_dir() { path.join(FIT_FILE) } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file)
        .map_err(|e| Error::Parse(format!("{}: {e}", file.display())))?;
    FitTable::parse_tsv(&text)
}
