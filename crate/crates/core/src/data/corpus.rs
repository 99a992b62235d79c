//! Claim/evidence corpus: loading, claim–evidence pairing and hashed
//! bag-of-words embedding.
//!
//! Corpus files are line-delimited JSON, one object per line:
//!
//! ```text
//! {"claim": "...", "evidence": ["...", "..."], "label": "SUPPORTS"}
//! ```
//!
//! Labels match case-insensitively. `SUPPORTS`/`REFUTES` (and the aliases
//! `supported`/`true`, `refuted`/`false`) are kept; anything else, including
//! `NOT ENOUGH INFO`, is skipped and counted.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::{Label, LabeledDataset, Sample};
use crate::error::{Error, Result};

/// Joins a claim and one evidence sentence in the pair text.
pub const PAIR_SEPARATOR: &str = " [SEP] ";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClaimLabel {
    Supported,
    Refuted,
}

impl ClaimLabel {
    fn parse(raw: &str) -> Option<Self> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "supports" | "supported" | "true" => Some(ClaimLabel::Supported),
            "refutes" | "refuted" | "false" => Some(ClaimLabel::Refuted),
            _ => None,
        }
    }
}

impl From<ClaimLabel> for Label {
    fn from(l: ClaimLabel) -> Self {
        match l {
            ClaimLabel::Supported => Label::Supported,
            ClaimLabel::Refuted => Label::Refuted,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimRecord {
    pub claim: String,
    pub evidence: Vec<String>,
    pub label: ClaimLabel,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClaimLoad {
    pub records: Vec<ClaimRecord>,
    /// Records whose label is neither supported nor refuted.
    pub skipped_label: usize,
    /// `(line, reason)` for kept-label records that were rejected.
    pub rejected: Vec<(usize, String)>,
}

#[derive(Deserialize)]
struct RawRecord {
    claim: String,
    evidence: Vec<String>,
    label: String,
}

pub fn load_claims(path: impl AsRef<Path>) -> Result<ClaimLoad> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut load = ClaimLoad::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            msg: e.to_string(),
        })?;
        let Some(label) = ClaimLabel::parse(&raw.label) else {
            load.skipped_label += 1;
            continue;
        };
        if raw.evidence.iter().all(|e| e.trim().is_empty()) {
            load.rejected.push((line_no, "no evidence".into()));
            continue;
        }
        load.records.push(ClaimRecord { claim: raw.claim, evidence: raw.evidence, label });
    }
    Ok(load)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimPair {
    pub text: String,
    pub label: Label,
}

/// One pair per `(claim, evidence)` combination, in input order.
pub fn make_pairs(records: &[ClaimRecord]) -> Vec<ClaimPair> {
    records
        .iter()
        .flat_map(|r| {
            r.evidence.iter().map(move |e| ClaimPair {
                text: format!("{}{PAIR_SEPARATOR}{}", r.claim, e),
                label: r.label.into(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedded {
    pub dataset: LabeledDataset,
    /// Indices of pairs with no tokens (embedded as the zero vector).
    pub empty: Vec<usize>,
}

fn fnv1a(seed: u64, token: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    seed.to_le_bytes()
        .iter()
        .chain(token.as_bytes())
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Lowercased alphanumeric tokens hashed into `dim` buckets, counted, then
/// L2-normalized.
pub fn embed_text(text: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    let lower = text.to_lowercase();
    for token in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
        v[(fnv1a(seed, token) % dim as u64) as usize] += 1.0;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

pub fn embed_pairs(pairs: &[ClaimPair], dim: usize, seed: u64) -> Result<Embedded> {
    if dim < 8 {
        return Err(Error::InvalidArgument(format!("embedding dimension must be at least 8, got {dim}")));
    }
    let mut empty = Vec::new();
    let samples = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let features = embed_text(&p.text, dim, seed);
            if features.iter().all(|&x| x == 0.0) {
                empty.push(i);
            }
            Sample { features, label: p.label }
        })
        .collect();
    Ok(Embedded { dataset: LabeledDataset::new(dim, samples)?, empty })
}
