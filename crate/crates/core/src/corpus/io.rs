//! Line-delimited JSON corpus files: one [`SentenceRecord`] per line, in id
//! order.

use std::io::{BufRead, Write};

use super::SentenceRecord;
use crate::error::{Error, Result};

pub fn write_corpus<W: Write>(mut out: W, records: &[SentenceRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_corpus<R: BufRead>(input: R) -> Result<Vec<SentenceRecord>> {
    let mut records = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SentenceRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("corpus line {}: {e}", lineno + 1)))?;
        if record.id != records.len() {
            return Err(Error::Parse(format!(
                "corpus line {}: expected id {}, found {}",
                lineno + 1,
                records.len(),
                record.id
            )));
        }
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{expand_coordinated, lexicon, CorpusSpec};

    #[test]
    fn round_trip_cartesian_and_positions() {
        let cart = CorpusSpec::Cartesian {
            template: lexicon::gerund_v1(),
        }
        .generate(0)
        .unwrap();
        let nouns: Vec<String> = ["cat", "dog", "rat", "hippo"].iter().map(|s| s.to_string()).collect();
        let coord = expand_coordinated(&nouns, &nouns, "man", 1).unwrap();
        for corpus in [cart, coord] {
            let mut buf = Vec::new();
            write_corpus(&mut buf, &corpus).unwrap();
            assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), corpus.len());
            let back = read_corpus(buf.as_slice()).unwrap();
            assert_eq!(back, corpus);
        }
    }

    #[test]
    fn out_of_order_ids_rejected() {
        let line = r#"{"id":3,"text":"x.","features":{}}"#;
        assert!(matches!(read_corpus(line.as_bytes()), Err(Error::Parse(_))));
    }
}
