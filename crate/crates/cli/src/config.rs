//! Run configuration: a TOML file whose sections map onto the core library's
//! config types. Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use trigan_core::data::{embed_pairs, gaussian_mixture, load_claims, make_pairs, split, LabeledDataset, MixtureSpec, Split};
use trigan_core::equilibrium::{DiscreteDist, EquilibriumProblem};
use trigan_core::metrics::RecordFormat;
use trigan_core::tri_gan::{Architecture, TrainConfig};
use trigan_core::variants::{GradCheckSpec, Variant};
use trigan_core::Priors;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub variant: Variant,
    /// Number of seeded runs for `repeat`.
    pub repeats: usize,
    /// Output directory; `--out` takes precedence.
    pub out: Option<PathBuf>,
    pub metrics_format: RecordFormat,
    /// Train / validation / test fractions.
    pub splits: [f64; 3],
    pub data: DataConfig,
    pub model: Architecture,
    /// `train.seed` is the base seed for runs and model initialization.
    pub train: TrainConfig,
    pub equilibrium: EquilibriumConfig,
    pub grad_check: GradCheckConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            variant: Variant::default(),
            repeats: 5,
            out: None,
            metrics_format: RecordFormat::Csv,
            splits: [0.8, 0.1, 0.1],
            data: DataConfig::default(),
            model: Architecture::default(),
            train: TrainConfig::default(),
            equilibrium: EquilibriumConfig::default(),
            grad_check: GradCheckConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Seed for sampling, embedding and splitting; fixed across repeats.
    pub seed: u64,
    pub source: DataSource,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { seed: 0, source: DataSource::Mixture(MixtureSpec::default()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSource {
    /// Two-Gaussian benchmark.
    Mixture(MixtureSpec),
    /// Line-delimited claim file, embedded with hashed bag-of-words.
    Corpus { path: PathBuf, embedding_dim: usize },
    /// A dataset CSV written by `gen-data`.
    Dataset { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriumConfig {
    pub p_p: Vec<f64>,
    pub p_n: Vec<f64>,
    pub pi_p: f64,
    pub grid_step: f64,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        Self { p_p: vec![1.0, 0.0], p_n: vec![0.0, 1.0], pi_p: 0.5, grid_step: 0.05 }
    }
}

impl EquilibriumConfig {
    pub fn problem(&self) -> Result<EquilibriumProblem> {
        let p_p = DiscreteDist::new(self.p_p.clone()).context("equilibrium.p_p")?;
        let p_n = DiscreteDist::new(self.p_n.clone()).context("equilibrium.p_n")?;
        let priors = Priors::from_positive(self.pi_p).context("equilibrium.pi_p")?;
        Ok(EquilibriumProblem::new(p_p, p_n, priors, self.grid_step).context("equilibrium")?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradCheckConfig {
    pub seed: u64,
    #[serde(flatten)]
    pub spec: GradCheckSpec,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self { seed: 0, spec: GradCheckSpec::default() }
    }
}

impl RunConfig {
    /// Defaults when `path` is `None`. Relative data paths are resolved
    /// against the config file's directory.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        match &mut cfg.data.source {
            DataSource::Corpus { path, .. } | DataSource::Dataset { path } if path.is_relative() => {
                *path = base.join(&*path);
            }
            _ => {}
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.repeats >= 1, "repeats: must be at least 1, got {}", self.repeats);
        let sum: f64 = self.splits.iter().sum();
        ensure!(
            self.splits.iter().all(|f| f.is_finite() && *f >= 0.0) && (sum - 1.0).abs() <= 1e-9,
            "splits: fractions must be non-negative and sum to 1, got {:?}",
            self.splits
        );
        ensure!(self.splits[0] > 0.0, "splits: training fraction must be positive");
        ensure!(self.model.noise_dim >= 1, "model.noise_dim: must be at least 1");
        ensure!(
            self.model.generator_hidden.iter().chain(&self.model.discriminator_hidden).all(|&w| w > 0),
            "model: hidden widths must be positive"
        );
        self.train.validate().context("train")?;
        match &self.data.source {
            DataSource::Mixture(spec) => {
                ensure!(
                    !spec.mean_pos.is_empty() && spec.mean_pos.len() == spec.mean_neg.len(),
                    "data.mean_pos / data.mean_neg: must have the same positive length"
                );
                ensure!(spec.cov_scale > 0.0 && spec.cov_scale.is_finite(), "data.cov_scale: must be positive");
            }
            DataSource::Corpus { embedding_dim, .. } => {
                ensure!(*embedding_dim >= 8, "data.embedding_dim: must be at least 8, got {embedding_dim}");
            }
            DataSource::Dataset { .. } => {}
        }
        self.equilibrium.problem()?;
        let g = &self.grad_check.spec;
        ensure!(g.instances >= 1 && g.batch_size >= 1, "grad_check: instances and batch_size must be at least 1");
        ensure!(g.eps > 0.0 && g.tolerance > 0.0, "grad_check: eps and tolerance must be positive");
        Ok(())
    }

    pub fn base_seed(&self) -> u64 {
        self.train.seed
    }
}

/// The full dataset named by the config, plus a note on what was read.
pub struct LoadedData {
    pub dataset: LabeledDataset,
    pub notes: Vec<String>,
}

pub fn load_data(cfg: &DataConfig) -> Result<LoadedData> {
    let mut notes = Vec::new();
    let dataset = match &cfg.source {
        DataSource::Mixture(spec) => gaussian_mixture(spec, cfg.seed)?,
        DataSource::Corpus { path, embedding_dim } => {
            let load = load_claims(path)?;
            notes.push(format!(
                "{} records kept, {} skipped for label, {} rejected",
                load.records.len(),
                load.skipped_label,
                load.rejected.len()
            ));
            for (line, reason) in &load.rejected {
                notes.push(format!("{}:{line}: {reason}", path.display()));
            }
            let pairs = make_pairs(&load.records);
            let embedded = embed_pairs(&pairs, *embedding_dim, cfg.seed)?;
            if !embedded.empty.is_empty() {
                notes.push(format!("{} pairs embedded as zero vectors", embedded.empty.len()));
            }
            embedded.dataset
        }
        DataSource::Dataset { path } => LabeledDataset::read_csv(path)?,
    };
    if dataset.is_empty() {
        bail!("data: the configured source produced no samples");
    }
    Ok(LoadedData { dataset, notes })
}

pub fn load_split(cfg: &RunConfig) -> Result<(Split, Vec<String>)> {
    let loaded = load_data(&cfg.data)?;
    let parts = split(&loaded.dataset, cfg.splits, cfg.data.seed)?;
    Ok((parts, loaded.notes))
}
