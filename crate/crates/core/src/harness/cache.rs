//! Persistent embedding cache: an append-only log of JSON lines with an
//! in-memory index.
//!
//! Each line is
//!
//! ```text
//! {"encoder":"mpnet","key":"<sha256 of text, hex>","text":"...","dimension":768,
//!  "vector":"<base64 of little-endian f64s>","created_at":1760000000}
//! ```
//!
//! Vectors are stored as raw bytes so a hit returns exactly the vector that
//! was written. Keys hash the exact text; no case folding or whitespace
//! normalization. A torn final line (from a crash mid-append) is cut off on
//! load; later entries for the same key replace earlier ones.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn text_key(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn encode_vector(v: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(v.len() * 8);
    for x in v {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    BASE64.encode(bytes)
}

fn decode_vector(s: &str) -> Option<Vec<f64>> {
    let bytes = BASE64.decode(s).ok()?;
    if bytes.len() % 8 != 0 {
        return None;
    }
    Some(
        bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect(),
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingCacheEntry {
    pub encoder: String,
    pub key: String,
    pub text: String,
    pub dimension: usize,
    pub vector: String,
    pub created_at: u64,
}

impl EmbeddingCacheEntry {
    pub fn new(encoder: &str, text: &str, vector: &[f64]) -> Self {
        EmbeddingCacheEntry {
            encoder: encoder.into(),
            key: text_key(text),
            text: text.into(),
            dimension: vector.len(),
            vector: encode_vector(vector),
            created_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    pub fn decode(&self) -> Option<Vec<f64>> {
        decode_vector(&self.vector).filter(|v| v.len() == self.dimension)
    }
}

type Index = HashMap<(String, String), Vec<f64>>;

pub struct EmbeddingCache {
    path: PathBuf,
    index: RwLock<Index>,
    file: Mutex<File>,
}

impl EmbeddingCache {
    /// Opens (creating if needed) the log at `path` and loads its index.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut index = Index::new();
        // Byte length of the log up to the end of the last complete entry.
        let mut good_len = 0u64;
        let mut torn_tail = false;
        if path.exists() {
            let data = std::fs::read(&path)?;
            let mut lines = data.split_inclusive(|&b| b == b'\n').enumerate().peekable();
            while let Some((i, raw)) = lines.next() {
                let is_last = lines.peek().is_none();
                let line = std::str::from_utf8(raw).unwrap_or("").trim_end_matches('\n');
                let entry = serde_json::from_str::<EmbeddingCacheEntry>(line)
                    .ok()
                    .and_then(|e| e.decode().map(|v| (e, v)));
                match entry {
                    Some((e, v)) if raw.ends_with(b"\n") => {
                        index.insert((e.encoder, e.key), v);
                    }
                    _ if line.trim().is_empty() && !is_last => {}
                    _ if is_last => {
                        log::warn!("{}: dropping incomplete final line", path.display());
                        torn_tail = true;
                        break;
                    }
                    _ => {
                        return Err(Error::Parse(format!(
                            "{}: malformed cache entry on line {}",
                            path.display(),
                            i + 1
                        )))
                    }
                }
                good_len += raw.len() as u64;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        if torn_tail {
            file.set_len(good_len)?;
        }
        Ok(EmbeddingCache {
            path,
            index: RwLock::new(index),
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("cache index lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, encoder: &str, text: &str) -> Option<Vec<f64>> {
        self.index
            .read()
            .expect("cache index lock")
            .get(&(encoder.to_string(), text_key(text)))
            .cloned()
    }

    /// Appends entries and makes them visible to readers. The log is synced
    /// before the index is updated.
    pub fn insert_many(&self, encoder: &str, items: &[(&str, &[f64])]) -> Result<()> {
        let mut buf = Vec::new();
        for (text, vector) in items {
            serde_json::to_writer(&mut buf, &EmbeddingCacheEntry::new(encoder, text, vector))?;
            buf.push(b'\n');
        }
        {
            let mut file = self.file.lock().expect("cache file lock");
            file.write_all(&buf)?;
            file.sync_data()?;
        }
        let mut index = self.index.write().expect("cache index lock");
        for (text, vector) in items {
            index.insert((encoder.to_string(), text_key(text)), vector.to_vec());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn persists_exact_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let v = vec![0.1 + 0.2, -1e-300, f64::MAX, 1.0 / 3.0];
        {
            let cache = EmbeddingCache::open(&path).unwrap();
            assert!(cache.get("enc", "The cat.").is_none());
            cache.insert_many("enc", &[("The cat.", &v)]).unwrap();
            assert_eq!(cache.get("enc", "The cat.").unwrap(), v);
        }
        let cache = EmbeddingCache::open(&path).unwrap();
        let got = cache.get("enc", "The cat.").unwrap();
        assert_eq!(
            got.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            v.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
        assert!(cache.get("other", "The cat.").is_none());
        assert!(cache.get("enc", "the cat.").is_none());
    }

    #[test]
    fn cuts_torn_last_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        {
            let cache = EmbeddingCache::open(&path).unwrap();
            cache.insert_many("e", &[("a", &[1.0]), ("b", &[2.0])]).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"encoder\":\"e\",\"key\":").unwrap();
        drop(f);

        let cache = EmbeddingCache::open(&path).unwrap();
        assert_eq!(cache.len(), 2);
        cache.insert_many("e", &[("c", &[3.0])]).unwrap();
        drop(cache);
        let cache = EmbeddingCache::open(&path).unwrap();
        assert_eq!(cache.get("e", "c").unwrap(), vec![3.0]);
    }

    #[test]
    fn rejects_corruption_before_the_end() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        std::fs::write(&path, "garbage\n{}\n").unwrap();
        assert!(EmbeddingCache::open(&path).is_err());
    }

    #[test]
    fn keys_are_sha256_hex() {
        assert_eq!(
            text_key("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
