//! Encoders and the batching, caching embedding client.
//!
//! Remote encoders speak a small JSON protocol:
//!
//! ```text
//! POST <endpoint>/embed
//! {"model": "<name>", "texts": ["...", ...]}
//!
//! 200 {"vectors": [[...], ...]}        one vector per text, same order
//! 4xx/5xx {"error": "<message>"}
//! ```
//!
//! Transport failures, 5xx, 408 and 429 are retried with exponential
//! backoff; other 4xx answers and malformed bodies fail immediately.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::EmbeddingCache;
use crate::corpus::SentenceRecord;
use crate::error::{Error, Result};
use crate::oracle::{OracleEmbedder, OracleSpec};

pub const DEFAULT_BATCH_SIZE: usize = 64;
pub const DEFAULT_RETRIES: u32 = 3;

pub trait Encoder: Send + Sync {
    fn id(&self) -> &str;

    /// One vector per text, in order.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>>;

    /// Whether vectors go through the persistent cache. Deterministic local
    /// encoders can skip it.
    fn cacheable(&self) -> bool {
        true
    }
}

/// Oracle encoder over a known corpus: texts are mapped back to their
/// feature records.
pub struct OracleEncoder {
    id: String,
    spec: OracleSpec,
    records: HashMap<String, SentenceRecord>,
}

impl OracleEncoder {
    pub fn new(spec: OracleSpec, corpus: &[SentenceRecord]) -> Result<Self> {
        spec.validate()?;
        Ok(OracleEncoder {
            id: spec.encoder_id(),
            spec,
            records: corpus.iter().map(|r| (r.text.clone(), r.clone())).collect(),
        })
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }
}

impl Encoder for OracleEncoder {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        let records = texts
            .iter()
            .map(|t| {
                self.records
                    .get(t)
                    .ok_or_else(|| Error::Protocol(format!("oracle `{}` has no features for {t:?}", self.id)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(records
            .par_iter()
            .map_init(
                || OracleEmbedder::new(&self.spec).expect("validated"),
                |emb, r| emb.embed(r),
            )
            .collect())
    }

    fn cacheable(&self) -> bool {
        false
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct ErrorResponse {
    error: String,
}

/// Encoder served over HTTP.
pub struct HttpEncoder {
    model: String,
    endpoint: Option<String>,
    agent: ureq::Agent,
    max_retries: u32,
    backoff: Duration,
    requests: AtomicUsize,
}

/// Upper bound on a response body.
const MAX_RESPONSE_BYTES: u64 = 1 << 30;

impl HttpEncoder {
    /// `endpoint` is the server root (e.g. `http://localhost:8080`). Without
    /// one the encoder can only be served from cache.
    pub fn new(model: &str, endpoint: Option<&str>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(300)))
            .build()
            .into();
        HttpEncoder {
            model: model.into(),
            endpoint: endpoint.map(|e| e.trim_end_matches('/').to_string()),
            agent,
            max_retries: DEFAULT_RETRIES,
            backoff: Duration::from_millis(200),
            requests: AtomicUsize::new(0),
        }
    }

    /// Sets the retry count and the delay before the first retry; each
    /// further retry waits twice as long.
    pub fn with_retries(mut self, max_retries: u32, backoff: Duration) -> Self {
        self.max_retries = max_retries;
        self.backoff = backoff;
        self
    }

    /// HTTP requests sent so far, including retries.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    fn attempt(&self, url: &str, texts: &[String]) -> std::result::Result<Vec<Vec<f64>>, (bool, Error)> {
        self.requests.fetch_add(1, Ordering::Relaxed);
        let transient = |e: Error| (true, e);
        let fatal = |e: Error| (false, e);
        let mut resp = self
            .agent
            .post(url)
            .send_json(EmbedRequest {
                model: &self.model,
                texts,
            })
            .map_err(|e| transient(Error::Transport(format!("{url}: {e}"))))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(MAX_RESPONSE_BYTES)
            .read_to_string()
            .map_err(|e| transient(Error::Transport(format!("{url}: reading response: {e}"))))?;
        if status == 200 {
            let parsed: EmbedResponse = serde_json::from_str(&body)
                .map_err(|e| fatal(Error::Protocol(format!("{url}: malformed response: {e}"))))?;
            return Ok(parsed.vectors);
        }
        let message = serde_json::from_str::<ErrorResponse>(&body)
            .map(|e| e.error)
            .unwrap_or_else(|_| body.chars().take(200).collect());
        let err = format!("{url}: status {status}: {message}");
        if status >= 500 || status == 408 || status == 429 {
            Err(transient(Error::Transport(err)))
        } else {
            Err(fatal(Error::Protocol(err)))
        }
    }
}

impl Encoder for HttpEncoder {
    fn id(&self) -> &str {
        &self.model
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        let Some(endpoint) = &self.endpoint else {
            return Err(Error::Transport("no encoder endpoint configured".into()));
        };
        let url = format!("{endpoint}/embed");
        let mut delay = self.backoff;
        let mut attempt = 0;
        loop {
            match self.attempt(&url, texts) {
                Ok(v) => return Ok(v),
                Err((true, e)) if attempt < self.max_retries => {
                    log::warn!("{e}; retrying in {delay:?}");
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                Err((_, e)) => return Err(e),
            }
        }
    }
}

/// Batches requests, consults and fills the cache, and validates answers.
pub struct EmbeddingClient {
    cache: Option<Arc<EmbeddingCache>>,
    batch_size: usize,
}

impl EmbeddingClient {
    pub fn new(cache: Option<Arc<EmbeddingCache>>) -> Self {
        EmbeddingClient {
            cache,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    /// Embeddings for every distinct text, keyed by text. Cached vectors are
    /// used first; the rest are requested in batches and written to the
    /// cache before this returns.
    pub fn fetch(&self, encoder: &dyn Encoder, texts: &[String]) -> Result<HashMap<String, Vec<f64>>> {
        let mut seen = HashSet::new();
        let unique: Vec<&String> = texts.iter().filter(|t| seen.insert(t.as_str())).collect();
        let cache = self.cache.as_deref().filter(|_| encoder.cacheable());

        let mut out = HashMap::with_capacity(unique.len());
        let mut missing: Vec<String> = Vec::new();
        let mut dimension: Option<usize> = None;
        for t in unique {
            match cache.and_then(|c| c.get(encoder.id(), t)) {
                Some(v) => {
                    check_dimension(encoder.id(), &mut dimension, v.len())?;
                    out.insert(t.clone(), v);
                }
                None => missing.push(t.clone()),
            }
        }

        for (b, batch) in missing.chunks(self.batch_size).enumerate() {
            let vectors = match encoder.embed(batch) {
                Ok(v) => v,
                Err(Error::Transport(reason)) => {
                    return Err(Error::EncoderUnavailable {
                        encoder: encoder.id().to_string(),
                        reason,
                        missing: missing[b * self.batch_size..].to_vec(),
                    })
                }
                Err(Error::Protocol(msg)) => {
                    return Err(Error::Protocol(format!("batch {b}: {msg}")));
                }
                Err(e) => return Err(e),
            };
            if vectors.len() != batch.len() {
                return Err(Error::Protocol(format!(
                    "batch {b} of encoder `{}`: sent {} texts, received {} vectors",
                    encoder.id(),
                    batch.len(),
                    vectors.len()
                )));
            }
            for (text, v) in batch.iter().zip(&vectors) {
                if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Protocol(format!(
                        "batch {b} of encoder `{}`: vector for {text:?} is empty or not finite",
                        encoder.id()
                    )));
                }
                check_dimension(encoder.id(), &mut dimension, v.len())
                    .map_err(|e| Error::Protocol(format!("batch {b}: {e}")))?;
            }
            if let Some(cache) = cache {
                let items: Vec<(&str, &[f64])> = batch
                    .iter()
                    .zip(&vectors)
                    .map(|(t, v)| (t.as_str(), v.as_slice()))
                    .collect();
                cache.insert_many(encoder.id(), &items)?;
            }
            out.extend(batch.iter().cloned().zip(vectors));
        }
        Ok(out)
    }
}

fn check_dimension(encoder: &str, expected: &mut Option<usize>, actual: usize) -> Result<()> {
    match *expected {
        None => {
            *expected = Some(actual);
            Ok(())
        }
        Some(d) if d == actual => Ok(()),
        Some(d) => Err(Error::Protocol(format!(
            "encoder `{encoder}` changed dimension from {d} to {actual}"
        ))),
    }
}
