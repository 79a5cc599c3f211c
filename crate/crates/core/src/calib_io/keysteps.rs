//! Keystep annotation files.
//!
//! One tab-separated record per line:
//!
//! ```text
//! <keystep_id>\t<start_s>\t<end_s>\t<embedding_file:row>[\t<confidence>]
//! ```
//!
//! Embedding files are feature-stream binaries whose rows are keystep
//! embeddings. The optional confidence column is used by prediction files;
//! those may also write `-` for the embedding reference.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::text::{content_lines, parse_f64};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Keystep {
    pub id: String,
    pub embedding: Vec<f64>,
    pub start_s: f64,
    pub end_s: f64,
}

impl Keystep {
    /// Half-open containment `start <= t < end`.
    pub fn contains(&self, t: f64) -> bool {
        self.start_s <= t && t < self.end_s
    }

    /// Integer seconds inside `[start, end)`, clipped to `[0, limit)`.
    pub fn integer_seconds(&self, limit: u32) -> std::ops::Range<u32> {
        let lo = self.start_s.max(0.0).ceil();
        let hi = self.end_s.ceil().min(f64::from(limit));
        if hi <= lo {
            0..0
        } else {
            lo as u32..hi as u32
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeystepSet {
    entries: Vec<Keystep>,
}

impl KeystepSet {
    pub fn new(entries: Vec<Keystep>) -> Result<KeystepSet> {
        let mut ids = HashSet::new();
        let dim = entries.first().map(|k| k.embedding.len());
        for k in &entries {
            if !(k.start_s.is_finite() && k.end_s.is_finite()) || k.start_s >= k.end_s {
                return Err(Error::invalid(
                    None,
                    format!("keystep `{}` has invalid interval [{}, {})", k.id, k.start_s, k.end_s),
                ));
            }
            if k.embedding.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(None, format!("keystep `{}` embedding is not finite", k.id)));
            }
            if Some(k.embedding.len()) != dim {
                return Err(Error::invalid(None, format!("keystep `{}` embedding dimension differs", k.id)));
            }
            if !ids.insert(k.id.as_str()) {
                return Err(Error::invalid(None, format!("duplicate keystep id `{}`", k.id)));
            }
        }
        Ok(KeystepSet { entries })
    }

    pub fn entries(&self) -> &[Keystep] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Keystep> {
        self.entries.iter().find(|k| k.id == id)
    }
}

/// Reference to one row of an embedding file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingRef {
    pub file: String,
    pub row: usize,
}

/// One raw line of a keystep or prediction file.
#[derive(Debug, Clone, PartialEq)]
pub struct KeystepRecord {
    pub id: String,
    pub start_s: f64,
    pub end_s: f64,
    pub embedding: Option<EmbeddingRef>,
    pub confidence: Option<f64>,
}

fn parse_ref(token: &str, line: usize) -> Result<Option<EmbeddingRef>> {
    if token == "-" {
        return Ok(None);
    }
    let (file, row) = token
        .rsplit_once(':')
        .ok_or_else(|| Error::parse(line, format!("embedding reference `{token}` lacks `:row`")))?;
    if file.is_empty() {
        return Err(Error::parse(line, format!("embedding reference `{token}` has empty file name")));
    }
    let row =
        row.parse().map_err(|_| Error::parse(line, format!("embedding row `{row}` is not an unsigned integer")))?;
    Ok(Some(EmbeddingRef { file: file.to_string(), row }))
}

/// Parses records without resolving embeddings or enforcing id uniqueness.
pub fn parse_keystep_records(text: &str) -> Result<Vec<KeystepRecord>> {
    let mut out = Vec::new();
    for (line, content) in content_lines(text) {
        let fields: Vec<&str> = content.split('\t').map(str::trim).collect();
        if !(fields.len() == 4 || fields.len() == 5) {
            return Err(Error::parse(line, format!("expected 4 or 5 tab-separated fields, found {}", fields.len())));
        }
        let id = fields[0];
        if id.is_empty() || id.contains(char::is_whitespace) {
            return Err(Error::parse(line, format!("invalid keystep id `{id}`")));
        }
        let start_s = parse_f64(fields[1], line, "start")?;
        let end_s = parse_f64(fields[2], line, "end")?;
        if start_s >= end_s {
            return Err(Error::invalid(Some(line), format!("start {start_s} is not before end {end_s}")));
        }
        let embedding = parse_ref(fields[3], line)?;
        let confidence = fields.get(4).map(|c| parse_f64(c, line, "confidence")).transpose()?;
        out.push(KeystepRecord { id: id.to_string(), start_s, end_s, embedding, confidence });
    }
    Ok(out)
}

pub fn serialize_keystep_records(records: &[KeystepRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let reference = r.embedding.as_ref().map_or_else(|| "-".to_string(), |e| format!("{}:{}", e.file, e.row));
        let _ = write!(out, "{}\t{:?}\t{:?}\t{}", r.id, r.start_s, r.end_s, reference);
        if let Some(c) = r.confidence {
            let _ = write!(out, "\t{c:?}");
        }
        out.push('\n');
    }
    out
}

/// Parses an annotation file, resolving every embedding reference through
/// `resolve(file, row)`.
pub fn parse_keystep_annotations<F>(text: &str, mut resolve: F) -> Result<KeystepSet>
where
    F: FnMut(&str, usize) -> Option<Vec<f64>>,
{
    let mut entries = Vec::new();
    let mut ids = HashSet::new();
    let mut dim = None;
    for (line, content) in content_lines(text) {
        // Re-parse line by line so errors carry the right line number.
        let record = parse_keystep_records(content)
            .map_err(|e| relocate(e, line))?
            .pop()
            .expect("one content line yields one record");
        let reference = record.embedding.ok_or_else(|| Error::Resolution { line, reference: "-".into() })?;
        let embedding = resolve(&reference.file, reference.row)
            .ok_or_else(|| Error::Resolution { line, reference: format!("{}:{}", reference.file, reference.row) })?;
        if embedding.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(Some(line), "embedding is not finite"));
        }
        if *dim.get_or_insert(embedding.len()) != embedding.len() {
            return Err(Error::invalid(Some(line), "embedding dimension differs from earlier keysteps"));
        }
        if !ids.insert(record.id.clone()) {
            return Err(Error::invalid(Some(line), format!("duplicate keystep id `{}`", record.id)));
        }
        entries.push(Keystep { id: record.id, embedding, start_s: record.start_s, end_s: record.end_s });
    }
    KeystepSet::new(entries)
}

fn relocate(err: Error, line: usize) -> Error {
    match err {
        Error::Parse { message, .. } => Error::Parse { line, message },
        Error::Validation { message, .. } => Error::Validation { line: Some(line), message },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolver(file: &str, row: usize) -> Option<Vec<f64>> {
        (file == "emb.vdfs" && row < 3).then(|| vec![row as f64, 1.0])
    }

    #[test]
    fn single_record() {
        let set = parse_keystep_annotations("k1\t0\t5\temb.vdfs:1\n", resolver).unwrap();
        assert_eq!(set.len(), 1);
        let k = &set.entries()[0];
        assert_eq!((k.start_s, k.end_s, k.embedding.clone()), (0.0, 5.0, vec![1.0, 1.0]));
    }

    #[test]
    fn empty_interval_rejected() {
        let err = parse_keystep_annotations("# hdr\nk1\t5\t5\temb.vdfs:1\n", resolver).unwrap_err();
        assert!(matches!(err, Error::Validation { line: Some(2), .. }), "{err:?}");
    }

    #[test]
    fn dangling_reference() {
        let err = parse_keystep_annotations("k1\t0\t5\temb.vdfs:9\n", resolver).unwrap_err();
        assert_eq!(err, Error::Resolution { line: 1, reference: "emb.vdfs:9".into() });
        let err = parse_keystep_annotations("k1\t0\t5\tother:0\n", resolver).unwrap_err();
        assert!(matches!(err, Error::Resolution { .. }));
    }

    #[test]
    fn duplicate_ids_and_bad_fields() {
        let text = "k1\t0\t1\temb.vdfs:0\nk1\t1\t2\temb.vdfs:1\n";
        assert!(matches!(parse_keystep_annotations(text, resolver), Err(Error::Validation { line: Some(2), .. })));
        assert!(matches!(parse_keystep_records("k1\t0\t1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_keystep_records("k1\t0\t1\tnocolon"), Err(Error::Parse { .. })));
    }

    #[test]
    fn integer_seconds_of_intervals() {
        let k = Keystep { id: "a".into(), embedding: vec![], start_s: 2.0, end_s: 7.0 };
        assert_eq!(k.integer_seconds(100), 2..7);
        assert_eq!(k.integer_seconds(5), 2..5);
        let k = Keystep { start_s: 2.2, end_s: 2.8, ..k };
        assert!(k.integer_seconds(100).is_empty());
    }

    #[test]
    fn predictions_with_confidence_round_trip() {
        let text = "k1\t0.5\t3.25\t-\t0.9\nk1\t1.0\t2.0\t-\t0.1\n";
        let recs = parse_keystep_records(text).unwrap();
        assert_eq!(recs[0].confidence, Some(0.9));
        assert_eq!(parse_keystep_records(&serialize_keystep_records(&recs)).unwrap(), recs);
    }
}
