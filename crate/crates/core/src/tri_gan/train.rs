use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::game::{role_objective, GameRules, Minibatch};
use super::objectives::GyLossMode;
use super::{classify_batch, NetRole, TriGanModel};
use crate::data::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::metrics::{precision_recall_f1, similarity_report, MetricsRecord, Pairing, Prf, SimilarityScores};
use crate::nn::{Direction, OptimizerKind, OptimizerState};
use crate::rng::{derive_seed, standard_normal};

const TRAIN_STREAM: u64 = 0x7472_6169_6e;
const EVAL_STREAM: u64 = 0x6576_616c;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearningRates {
    pub g_p: f64,
    pub g_n: f64,
    pub g_y: f64,
    pub d_p: f64,
    pub d_n: f64,
    pub d_y: f64,
}

impl LearningRates {
    pub fn uniform(lr: f64) -> Self {
        Self { g_p: lr, g_n: lr, g_y: lr, d_p: lr, d_n: lr, d_y: lr }
    }

    pub fn get(&self, role: NetRole) -> f64 {
        match role {
            NetRole::Gp => self.g_p,
            NetRole::Gn => self.g_n,
            NetRole::Gy => self.g_y,
            NetRole::Dp => self.d_p,
            NetRole::Dn => self.d_n,
            NetRole::Dy => self.d_y,
        }
    }
}

impl Default for LearningRates {
    fn default() -> Self {
        Self::uniform(1e-3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rates: LearningRates,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub gy_loss: GyLossMode,
    /// Evaluate every this many iterations; 0 disables evaluation.
    pub eval_every: usize,
    pub similarity_sample_cap: usize,
    pub pairing: Pairing,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            batch_size: 64,
            learning_rates: LearningRates::default(),
            optimizer: OptimizerKind::default(),
            seed: 0,
            gy_loss: GyLossMode::default(),
            eval_every: 100,
            similarity_sample_cap: 20_000,
            pairing: Pairing::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be at least 1".into()));
        }
        if self.similarity_sample_cap == 0 {
            return Err(Error::InvalidArgument("similarity_sample_cap must be at least 1".into()));
        }
        for role in NetRole::ALL {
            let lr = self.learning_rates.get(role);
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::InvalidArgument(format!("learning rate for {role} must be positive, got {lr}")));
            }
        }
        if let OptimizerKind::AdaptiveMoment { beta1, beta2, epsilon } = self.optimizer {
            if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && epsilon > 0.0) {
                return Err(Error::InvalidArgument("adaptive-moment needs beta1, beta2 in [0, 1) and epsilon > 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// G_y on the held-out set, supported = positive.
    pub prf: Option<Prf>,
    /// Generated vs. real training samples, pooled over both classes.
    pub similarity: Option<SimilarityScores>,
}

fn sample_rows<R: Rng>(rng: &mut R, data: &Array2<f64>, m: usize) -> Array2<f64> {
    let idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..data.nrows())).collect();
    data.select(Axis(0), &idx)
}

/// Runs the alternating updates: each iteration ascends D_p, D_n, D_y on one
/// noise draw, then descends G_p, G_n, G_y on a fresh one. Within each phase
/// all three gradients are taken before any net moves. Every iteration
/// emits a record carrying the three discriminator objectives; evaluation
/// iterations add held-out P/R/F1 (when `val` is given) and similarity.
pub fn train(
    mut model: TriGanModel,
    rules: &GameRules,
    data: &LabeledDataset,
    val: Option<&LabeledDataset>,
    cfg: &TrainConfig,
) -> Result<(TriGanModel, Vec<MetricsRecord>)> {
    cfg.validate()?;
    if data.dim() != model.sample_dim() {
        return Err(Error::Shape(format!("data has {} features, model expects {}", data.dim(), model.sample_dim())));
    }
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    let pos = data.class_features(Label::Supported);
    let neg = data.class_features(Label::Refuted);
    if pos.nrows() == 0 || neg.nrows() == 0 {
        return Err(Error::SingleClass);
    }
    let all = data.features();

    let mut opts = NetRole::ALL
        .iter()
        .map(|&r| OptimizerState::new(cfg.optimizer, cfg.learning_rates.get(r), model.net(r)))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, TRAIN_STREAM, 0));
    let m = cfg.batch_size;
    let mut telemetry = Vec::with_capacity(cfg.iterations);

    for it in 0..cfg.iterations {
        let mut batch = Minibatch {
            z: standard_normal(&mut rng, m, model.noise_dim()),
            x_p: sample_rows(&mut rng, &pos, m),
            x_n: sample_rows(&mut rng, &neg, m),
            x: sample_rows(&mut rng, &all, m),
        };
        let mut record = MetricsRecord { iter: it as u64 + 1, ..Default::default() };
        let disc = [NetRole::Dp, NetRole::Dn, NetRole::Dy]
            .into_iter()
            .map(|role| role_objective(&model, rules, cfg.gy_loss, &batch, role).map(|(v, g)| (role, v, g)))
            .collect::<Result<Vec<_>>>()?;
        record.loss_pos = Some(disc[0].1);
        record.loss_neg = Some(disc[1].1);
        record.loss_label = Some(disc[2].1);
        for (role, _, grads) in disc {
            opts[role as usize].step(model.net_mut(role), &grads, Direction::Ascend)?;
        }

        batch.z = standard_normal(&mut rng, m, model.noise_dim());
        let updates = [NetRole::Gp, NetRole::Gn, NetRole::Gy]
            .into_iter()
            .map(|role| role_objective(&model, rules, cfg.gy_loss, &batch, role).map(|(_, g)| (role, g)))
            .collect::<Result<Vec<_>>>()?;
        for (role, grads) in updates {
            opts[role as usize].step(model.net_mut(role), &grads, Direction::Descend)?;
        }

        if cfg.eval_every > 0 && (it + 1) % cfg.eval_every == 0 {
            let seed = derive_seed(cfg.seed, EVAL_STREAM, it as u64 + 1);
            let report = evaluate(&model, data, val, cfg.similarity_sample_cap, cfg.pairing, seed)?;
            if let Some(p) = report.prf {
                record.precision = Some(p.precision);
                record.recall = Some(p.recall);
                record.f1 = Some(p.f1);
            }
            if let Some(s) = report.similarity {
                record = record.with_similarity(&s);
            }
        }
        telemetry.push(record);
    }
    Ok((model, telemetry))
}

/// Held-out metrics for G_y and per-class similarity of `min(cap, n_c)`
/// generated samples to the `n_c` real training samples of each class.
pub fn evaluate(
    model: &TriGanModel,
    real: &LabeledDataset,
    val: Option<&LabeledDataset>,
    cap: usize,
    pairing: Pairing,
    seed: u64,
) -> Result<EvalReport> {
    let prf = match val {
        Some(v) if !v.is_empty() => {
            let (_, pred) = classify_batch(&model.g_y, v.features().view())?;
            Some(precision_recall_f1(&pred, &v.labels(), Label::Supported.as_u8())?)
        }
        _ => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut c, mut man, mut euc, mut pairs) = (0.0, 0.0, 0.0, 0usize);
    for (label, gen) in [(Label::Supported, &model.g_p), (Label::Refuted, &model.g_n)] {
        let class = real.class_features(label);
        if class.nrows() == 0 {
            continue;
        }
        let n = cap.min(class.nrows());
        let fake = gen.predict(standard_normal(&mut rng, n, model.noise_dim()).view())?;
        let s = similarity_report(class.view(), fake.view(), cap, rng.random(), pairing)?;
        let w = s.pairs as f64;
        c += s.cosine * w;
        man += s.manhattan * w;
        euc += s.euclidean * w;
        pairs += s.pairs;
    }
    let similarity = (pairs > 0).then(|| {
        let k = pairs as f64;
        SimilarityScores { cosine: c / k, manhattan: man / k, euclidean: euc / k, pairs }
    });
    Ok(EvalReport { prf, similarity })
}
