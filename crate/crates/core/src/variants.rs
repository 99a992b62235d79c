//! Ablations of the adversarial game and a plain supervised baseline.
//!
//! * Inverted: the positive and negative value functions trade places. D_n
//!   is trained on positive data, and G_n descends the negated value
//!   `-mean(ln D_n(x_p)) - mean(ln(1 - D_n(G_n z)))`, which pushes D_n's score
//!   of its samples toward 0.
//! * Symmetric, as printed: both value functions are the positive game over
//!   D_p and G_p. D_n and G_n do not appear in either, so only their D_y terms
//!   move them.
//! * Symmetric, intended: the second function mirrors the first over D_n, G_n
//!   and negative data.
//!
//! The variant generators use the `ln(1 - D(G z))` form of their value
//! function. D_y and G_y are trained exactly as in the proposed model.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::metrics::{precision_recall_f1, MetricsRecord};
use crate::nn::{mlp, Activation, Direction, NeuralNet, OptimizerState, PROB_EPS};
use crate::priors::Priors;
use crate::rng::derive_seed;
use crate::tri_gan::objectives::{gan_objective, GyLossMode};
use crate::tri_gan::{classify_batch, role_grad_errors, role_objective, Architecture, Game, GameRules, GenTerm, Minibatch, NetRole, TriGanModel, TrainConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    #[default]
    Proposed,
    Inverted,
    Symmetric,
    SymmetricIntended,
    Baseline,
}

impl Variant {
    pub const ALL: [Variant; 5] =
        [Variant::Proposed, Variant::Inverted, Variant::Symmetric, Variant::SymmetricIntended, Variant::Baseline];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Proposed => "proposed",
            Variant::Inverted => "inverted",
            Variant::Symmetric => "symmetric",
            Variant::SymmetricIntended => "symmetric-intended",
            Variant::Baseline => "baseline",
        }
    }

    /// Game rules for the adversarial variants; `None` for the baseline.
    pub fn rules(self) -> Option<GameRules> {
        match self {
            Variant::Proposed => Some(GameRules::proposed()),
            Variant::Inverted => Some(inverted_rules()),
            Variant::Symmetric => Some(symmetric_rules(SymmetricMode::AsPrinted)),
            Variant::SymmetricIntended => Some(symmetric_rules(SymmetricMode::Intended)),
            Variant::Baseline => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetricMode {
    AsPrinted,
    Intended,
}

impl FromStr for SymmetricMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-printed" => Ok(SymmetricMode::AsPrinted),
            "intended" => Ok(SymmetricMode::Intended),
            other => Err(Error::InvalidArgument(format!("unknown symmetric mode {other:?}"))),
        }
    }
}

const POSITIVE_GAME: Game = Game { disc: NetRole::Dp, real: Label::Supported, generator: NetRole::Gp };

pub fn inverted_rules() -> GameRules {
    GameRules {
        positive: POSITIVE_GAME,
        negative: Game { disc: NetRole::Dn, real: Label::Supported, generator: NetRole::Gn },
        g_p: GenTerm::Saturating(NetRole::Dp),
        g_n: GenTerm::Flipped(NetRole::Dn),
    }
}

pub fn symmetric_rules(mode: SymmetricMode) -> GameRules {
    match mode {
        SymmetricMode::AsPrinted => GameRules {
            positive: POSITIVE_GAME,
            negative: POSITIVE_GAME,
            g_p: GenTerm::Saturating(NetRole::Dp),
            g_n: GenTerm::Absent,
        },
        SymmetricMode::Intended => GameRules {
            positive: POSITIVE_GAME,
            negative: Game { disc: NetRole::Dn, real: Label::Refuted, generator: NetRole::Gn },
            g_p: GenTerm::Saturating(NetRole::Dp),
            g_n: GenTerm::Saturating(NetRole::Dn),
        },
    }
}

/// The three inverted value functions on discriminator probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvertedValues {
    /// `mean(ln D_n(x_p)) + mean(ln(1 - D_n(G_n z)))`, ascended by D_n.
    pub d_n: f64,
    /// Negation of the above, descended by G_n.
    pub g_n: f64,
    /// `mean(ln D_p(x_p)) + mean(ln(1 - D_p(G_p z)))`, the D_p/G_p game.
    pub positive: f64,
}

pub fn inverted_values(
    d_n_on_pos: ArrayView1<f64>,
    d_n_on_gn: ArrayView1<f64>,
    d_p_on_pos: ArrayView1<f64>,
    d_p_on_gp: ArrayView1<f64>,
) -> Result<InvertedValues> {
    let d_n = gan_objective(d_n_on_pos, d_n_on_gn)?.value;
    Ok(InvertedValues { d_n, g_n: -d_n, positive: gan_objective(d_p_on_pos, d_p_on_gp)?.value })
}

/// The scalar each of the six nets is trained on for one minibatch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantLosses {
    pub d_p: f64,
    pub d_n: f64,
    pub d_y: f64,
    pub g_p: f64,
    pub g_n: f64,
    pub g_y: f64,
}

fn losses(model: &TriGanModel, rules: &GameRules, gy_mode: GyLossMode, batch: &Minibatch) -> Result<VariantLosses> {
    let v = |role| role_objective(model, rules, gy_mode, batch, role).map(|(v, _)| v);
    Ok(VariantLosses {
        d_p: v(NetRole::Dp)?,
        d_n: v(NetRole::Dn)?,
        d_y: v(NetRole::Dy)?,
        g_p: v(NetRole::Gp)?,
        g_n: v(NetRole::Gn)?,
        g_y: v(NetRole::Gy)?,
    })
}

pub fn inverted_losses(model: &TriGanModel, batch: &Minibatch, gy_mode: GyLossMode) -> Result<VariantLosses> {
    losses(model, &inverted_rules(), gy_mode, batch)
}

pub fn symmetric_losses(
    model: &TriGanModel,
    batch: &Minibatch,
    mode: SymmetricMode,
    gy_mode: GyLossMode,
) -> Result<VariantLosses> {
    losses(model, &symmetric_rules(mode), gy_mode, batch)
}

/// The two symmetric value functions, each evaluated from scratch on the
/// batch. In as-printed mode both are the positive game.
pub fn symmetric_values(model: &TriGanModel, batch: &Minibatch, mode: SymmetricMode) -> Result<(f64, f64)> {
    let rules = symmetric_rules(mode);
    let value = |game: &Game| -> Result<f64> {
        let real = match game.real {
            Label::Supported => &batch.x_p,
            Label::Refuted => &batch.x_n,
        };
        let d = model.net(game.disc);
        let fake = model.net(game.generator).predict(batch.z.view())?;
        let dr = d.predict(real.view())?;
        let df = d.predict(fake.view())?;
        Ok(gan_objective(dr.column(0), df.column(0))?.value)
    };
    Ok((value(&rules.positive)?, value(&rules.negative)?))
}

/// Supervised cross-entropy training of a `[d, hidden…, 1]` classifier with
/// the discriminator architecture. Uses `cfg.iterations`, `batch_size`,
/// `optimizer`, `seed`, `eval_every`, and G_y's learning rate.
pub fn baseline_train(
    data: &LabeledDataset,
    val: Option<&LabeledDataset>,
    arch: &Architecture,
    cfg: &TrainConfig,
) -> Result<(NeuralNet, Vec<MetricsRecord>)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    if data.count(Label::Supported) == 0 || data.count(Label::Refuted) == 0 {
        return Err(Error::SingleClass);
    }
    let mut net = mlp(
        data.dim(),
        &arch.discriminator_hidden,
        1,
        arch.discriminator_activation,
        Activation::Logistic,
        derive_seed(cfg.seed, 0x6261_7365, 0),
    )?;
    let x = data.features();
    let y: Vec<f64> = data.labels().into_iter().map(f64::from).collect();
    let mut opt = OptimizerState::new(cfg.optimizer, cfg.learning_rates.g_y, &net)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0x6261_7365, 1));
    let m = cfg.batch_size;
    let mut telemetry = Vec::with_capacity(cfg.iterations);

    for it in 0..cfg.iterations {
        let idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..x.nrows())).collect();
        let xb = x.select(Axis(0), &idx);
        let (out, cache) = net.forward(xb.view())?;
        let mut loss = 0.0;
        let mut grad = Array2::zeros((m, 1));
        for (k, &i) in idx.iter().enumerate() {
            let p = out[[k, 0]].clamp(PROB_EPS, 1.0 - PROB_EPS);
            loss -= y[i] * p.ln() + (1.0 - y[i]) * (1.0 - p).ln();
            grad[[k, 0]] = (p - y[i]) / (p * (1.0 - p)) / m as f64;
        }
        let (grads, _) = net.backward(&cache, grad.view())?;
        opt.step(&mut net, &grads, Direction::Descend)?;

        let mut record = MetricsRecord { iter: it as u64 + 1, loss_label: Some(loss / m as f64), ..Default::default() };
        if let Some(v) = val.filter(|v| !v.is_empty()) {
            if cfg.eval_every > 0 && (it + 1) % cfg.eval_every == 0 {
                let (_, pred) = classify_batch(&net, v.features().view())?;
                let p = precision_recall_f1(&pred, &v.labels(), Label::Supported.as_u8())?;
                record.precision = Some(p.precision);
                record.recall = Some(p.recall);
                record.f1 = Some(p.f1);
            }
        }
        telemetry.push(record);
    }
    Ok((net, telemetry))
}

/// One game configuration covered by the gradient check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckCase {
    pub name: &'static str,
    pub rules: GameRules,
    pub gy_mode: GyLossMode,
}

/// The proposed model under both G_y losses, the inverted variant and both
/// symmetric readings.
pub fn grad_check_cases() -> Vec<GradCheckCase> {
    vec![
        GradCheckCase { name: "proposed/eq4", rules: GameRules::proposed(), gy_mode: GyLossMode::Eq4 },
        GradCheckCase { name: "proposed/alg1-line14", rules: GameRules::proposed(), gy_mode: GyLossMode::Alg1Line14 },
        GradCheckCase { name: "inverted", rules: inverted_rules(), gy_mode: GyLossMode::Eq4 },
        GradCheckCase { name: "symmetric", rules: symmetric_rules(SymmetricMode::AsPrinted), gy_mode: GyLossMode::Eq4 },
        GradCheckCase {
            name: "symmetric-intended",
            rules: symmetric_rules(SymmetricMode::Intended),
            gy_mode: GyLossMode::Eq4,
        },
    ]
}

/// Random instances for [`grad_check_suite`]. The default nets are small
/// and smooth: ReLU kinks and parameters whose gradient sits near the
/// finite-difference round-off floor (about 1e-11) both inflate the
/// per-parameter relative error without indicating a backprop fault.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradCheckSpec {
    pub architecture: Architecture,
    pub sample_dim: usize,
    pub batch_size: usize,
    pub instances: usize,
    pub eps: f64,
    pub tolerance: f64,
}

impl Default for GradCheckSpec {
    fn default() -> Self {
        Self {
            architecture: Architecture {
                noise_dim: 4,
                generator_hidden: vec![4, 4],
                discriminator_hidden: vec![4, 4],
                discriminator_activation: Activation::Tanh,
                ..Default::default()
            },
            sample_dim: 2,
            batch_size: 8,
            instances: 20,
            eps: 1e-5,
            tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckResult {
    pub case: String,
    /// Worst error over instances, keyed by net name.
    pub max_error: std::collections::BTreeMap<String, f64>,
    pub worst: f64,
    pub passed: bool,
}

/// Every case on `spec.instances` random models, batches and priors.
/// Instance `i` uses the same draw for every case.
pub fn grad_check_suite(spec: &GradCheckSpec, seed: u64) -> Result<Vec<GradCheckResult>> {
    if spec.instances == 0 || spec.batch_size == 0 {
        return Err(Error::InvalidArgument("grad check needs at least one instance and one sample".into()));
    }
    grad_check_cases()
        .into_iter()
        .map(|case| {
            let per_instance = (0..spec.instances as u64)
                .into_par_iter()
                .map(|i| {
                    let s = derive_seed(seed, 0x6772_6164, i);
                    let pi_p = ChaCha8Rng::seed_from_u64(s).random_range(0.2..0.8);
                    let model = TriGanModel::new(&spec.architecture, spec.sample_dim, Priors::from_positive(pi_p)?, s)?;
                    let batch = Minibatch::random(model.noise_dim(), spec.sample_dim, spec.batch_size, s);
                    role_grad_errors(&model, &case.rules, case.gy_mode, &batch, spec.eps)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut worst = [0.0f64; 6];
            for errs in &per_instance {
                for (w, e) in worst.iter_mut().zip(errs) {
                    *w = w.max(*e);
                }
            }
            let overall = worst.iter().copied().fold(0.0, f64::max);
            Ok(GradCheckResult {
                case: case.name.to_string(),
                max_error: NetRole::ALL.iter().map(|r| (r.name().to_string(), worst[*r as usize])).collect(),
                worst: overall,
                passed: overall <= spec.tolerance,
            })
        })
        .collect()
}
