//! Labeled feature datasets: synthetic Gaussian benchmarks, CSV export, and
//! the claim/evidence corpus pipeline in [`corpus`].

pub mod corpus;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::priors::Priors;

pub use corpus::{embed_pairs, load_claims, make_pairs, ClaimLabel, ClaimLoad, ClaimPair, ClaimRecord, Embedded};

/// Binary claim label: 1 = supported (positive), 0 = refuted (negative).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Refuted = 0,
    Supported = 1,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::Refuted),
            1 => Some(Label::Supported),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    dim: usize,
    samples: Vec<Sample>,
}

impl LabeledDataset {
    pub fn new(dim: usize, samples: Vec<Sample>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("sample dimension must be positive".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != dim {
                return Err(Error::Shape(format!(
                    "sample {i} has {} features, expected {dim}",
                    s.features.len()
                )));
            }
            if !s.features.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("sample features"));
            }
        }
        Ok(Self { dim, samples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label.as_u8()).collect()
    }

    /// All features as an `n × dim` matrix.
    pub fn features(&self) -> Array2<f64> {
        self.matrix(self.samples.iter())
    }

    /// Features of one class as an `n_class × dim` matrix.
    pub fn class_features(&self, label: Label) -> Array2<f64> {
        self.matrix(self.samples.iter().filter(|s| s.label == label))
    }

    fn matrix<'a>(&self, it: impl Iterator<Item = &'a Sample>) -> Array2<f64> {
        let flat: Vec<f64> = it.flat_map(|s| s.features.iter().copied()).collect();
        let rows = flat.len() / self.dim;
        Array2::from_shape_vec((rows, self.dim), flat).expect("rows are dim-aligned")
    }

    /// Writes `label,f_0,...,f_{d-1}` with a header row.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("label");
        for j in 0..self.dim {
            out.push_str(&format!(",f_{j}"));
        }
        out.push('\n');
        for s in &self.samples {
            out.push_str(&s.label.to_string());
            for v in &s.features {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.first() != Some(&"label") || cols.len() < 2 {
            return Err(parse_err(1, "header must be `label,f_0,...`".into()));
        }
        let dim = cols.len() - 1;
        let mut samples = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 1 {
                return Err(parse_err(i + 1, format!("expected {} fields, found {}", dim + 1, fields.len())));
            }
            let label = u8::from_str(fields[0].trim())
                .ok()
                .and_then(Label::from_u8)
                .ok_or_else(|| parse_err(i + 1, format!("bad label `{}`", fields[0])))?;
            let features = fields[1..]
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(i + 1, e.to_string()))?;
            samples.push(Sample { features, label });
        }
        Self::new(dim, samples)
    }
}

/// Empirical `(π_p, π_n)`; rejects empty and single-class datasets.
pub fn class_priors(dataset: &LabeledDataset) -> Result<Priors> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    Priors::from_counts(dataset.count(Label::Supported), dataset.count(Label::Refuted))
}

/// Two isotropic Gaussians, one per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub n_per_class: usize,
    pub mean_pos: Vec<f64>,
    pub mean_neg: Vec<f64>,
    /// Covariance is `cov_scale · I`.
    pub cov_scale: f64,
}

impl Default for MixtureSpec {
    fn default() -> Self {
        Self { n_per_class: 5000, mean_pos: vec![2.0, 2.0], mean_neg: vec![-2.0, -2.0], cov_scale: 1.0 }
    }
}

/// Positives first, then negatives; deterministic under `seed`.
pub fn gaussian_mixture(spec: &MixtureSpec, seed: u64) -> Result<LabeledDataset> {
    let dim = spec.mean_pos.len();
    if dim == 0 || spec.mean_neg.len() != dim {
        return Err(Error::Shape("class means must share a positive dimension".into()));
    }
    if !(spec.cov_scale > 0.0 && spec.cov_scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "covariance scale must be positive, got {}",
            spec.cov_scale
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, spec.cov_scale.sqrt()).expect("positive std");
    let mut samples = Vec::with_capacity(2 * spec.n_per_class);
    for (mean, label) in [(&spec.mean_pos, Label::Supported), (&spec.mean_neg, Label::Refuted)] {
        for _ in 0..spec.n_per_class {
            let features = mean.iter().map(|m| m + normal.sample(&mut rng)).collect();
            samples.push(Sample { features, label });
        }
    }
    LabeledDataset::new(dim, samples)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: LabeledDataset,
    pub val: LabeledDataset,
    pub test: LabeledDataset,
}

/// Seeded shuffle-split. Validation and test sizes are `floor(n·f)`; the
/// remainder goes to training.
pub fn split(dataset: &LabeledDataset, fractions: [f64; 3], seed: u64) -> Result<Split> {
    if fractions.iter().any(|f| !(f.is_finite() && *f >= 0.0)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split fractions must be non-negative and sum to 1, got {fractions:?}"
        )));
    }
    let n = dataset.len();
    let n_val = (n as f64 * fractions[1] + 1e-9).floor() as usize;
    let n_test = (n as f64 * fractions[2] + 1e-9).floor() as usize;
    let n_train = n - n_val - n_test;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let take = |idx: &[usize]| {
        LabeledDataset::new(dataset.dim, idx.iter().map(|&i| dataset.samples[i].clone()).collect())
    };
    Ok(Split {
        train: take(&order[..n_train])?,
        val: take(&order[n_train..n_train + n_val])?,
        test: take(&order[n_train + n_val..])?,
    })
}
