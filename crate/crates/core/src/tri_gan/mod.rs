//! The three-pair adversarial model: positive and negative sample generators
//! with their discriminators, plus a class-label generator judged by a
//! discriminator that sees the whole mixture.

mod game;
pub mod objectives;
mod train;

pub use game::{role_grad_errors, role_objective, Game, GameRules, GenTerm, Minibatch};
pub use objectives::{
    d_y_objective, g_n_loss, g_p_loss, g_y_loss, gan_objective, generator_loss, Graded, GyLossMode,
};
pub use train::{evaluate, train, EvalReport, LearningRates, TrainConfig};

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::NamedNets;
use crate::nn::{mlp, Activation, NeuralNet};
use crate::priors::Priors;
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NetRole {
    Gp,
    Gn,
    Gy,
    Dp,
    Dn,
    Dy,
}

impl NetRole {
    pub const ALL: [NetRole; 6] = [NetRole::Gp, NetRole::Gn, NetRole::Gy, NetRole::Dp, NetRole::Dn, NetRole::Dy];

    /// Checkpoint key.
    pub fn name(self) -> &'static str {
        match self {
            NetRole::Gp => "Gp",
            NetRole::Gn => "Gn",
            NetRole::Gy => "Gy",
            NetRole::Dp => "Dp",
            NetRole::Dn => "Dn",
            NetRole::Dy => "Dy",
        }
    }

    pub fn is_discriminator(self) -> bool {
        matches!(self, NetRole::Dp | NetRole::Dn | NetRole::Dy)
    }
}

impl std::fmt::Display for NetRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Layer widths and activations for the six nets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Architecture {
    pub noise_dim: usize,
    pub generator_hidden: Vec<usize>,
    pub generator_activation: Activation,
    pub discriminator_hidden: Vec<usize>,
    pub discriminator_activation: Activation,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            noise_dim: 8,
            generator_hidden: vec![64, 64],
            generator_activation: Activation::Tanh,
            discriminator_hidden: vec![64, 64],
            discriminator_activation: Activation::Relu,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriGanModel {
    pub g_p: NeuralNet,
    pub g_n: NeuralNet,
    pub g_y: NeuralNet,
    pub d_p: NeuralNet,
    pub d_n: NeuralNet,
    pub d_y: NeuralNet,
    priors: Priors,
    noise_dim: usize,
    sample_dim: usize,
}

impl TriGanModel {
    /// Fresh nets; each role draws its initial weights from its own seed.
    pub fn new(arch: &Architecture, sample_dim: usize, priors: Priors, seed: u64) -> Result<Self> {
        if arch.noise_dim == 0 || sample_dim == 0 {
            return Err(Error::Shape("noise and sample dimensions must be positive".into()));
        }
        let s = |role: NetRole| derive_seed(seed, 0x6e65_7473, role as u64);
        let gen = |role| {
            mlp(arch.noise_dim, &arch.generator_hidden, sample_dim, arch.generator_activation, Activation::Identity, s(role))
        };
        let disc = |role| {
            mlp(sample_dim, &arch.discriminator_hidden, 1, arch.discriminator_activation, Activation::Logistic, s(role))
        };
        Self::from_nets(
            [gen(NetRole::Gp)?, gen(NetRole::Gn)?, disc(NetRole::Gy)?, disc(NetRole::Dp)?, disc(NetRole::Dn)?, disc(NetRole::Dy)?],
            priors,
        )
    }

    /// Nets in [`NetRole::ALL`] order.
    pub fn from_nets(nets: [NeuralNet; 6], priors: Priors) -> Result<Self> {
        let [g_p, g_n, g_y, d_p, d_n, d_y] = nets;
        let noise_dim = g_p.input_dim();
        let sample_dim = g_p.output_dim();
        if g_n.input_dim() != noise_dim || g_n.output_dim() != sample_dim {
            return Err(Error::Shape("G_p and G_n must share noise and sample dimensions".into()));
        }
        for (role, net) in [(NetRole::Gy, &g_y), (NetRole::Dp, &d_p), (NetRole::Dn, &d_n), (NetRole::Dy, &d_y)] {
            if net.input_dim() != sample_dim || net.output_dim() != 1 {
                return Err(Error::Shape(format!("{role} must map {sample_dim} features to 1 output")));
            }
            if net.activations().last() != Some(&Activation::Logistic) {
                return Err(Error::Shape(format!("{role} must end in a logistic layer")));
            }
        }
        Ok(Self { g_p, g_n, g_y, d_p, d_n, d_y, priors, noise_dim, sample_dim })
    }

    pub fn priors(&self) -> Priors {
        self.priors
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn sample_dim(&self) -> usize {
        self.sample_dim
    }

    pub fn net(&self, role: NetRole) -> &NeuralNet {
        match role {
            NetRole::Gp => &self.g_p,
            NetRole::Gn => &self.g_n,
            NetRole::Gy => &self.g_y,
            NetRole::Dp => &self.d_p,
            NetRole::Dn => &self.d_n,
            NetRole::Dy => &self.d_y,
        }
    }

    /// Mutable access for parameter edits; dimensions must be left unchanged.
    pub fn net_mut(&mut self, role: NetRole) -> &mut NeuralNet {
        match role {
            NetRole::Gp => &mut self.g_p,
            NetRole::Gn => &mut self.g_n,
            NetRole::Gy => &mut self.g_y,
            NetRole::Dp => &mut self.d_p,
            NetRole::Dn => &mut self.d_n,
            NetRole::Dy => &mut self.d_y,
        }
    }

    pub fn to_named(&self) -> NamedNets {
        NetRole::ALL.iter().map(|&r| (r.name().to_string(), self.net(r).clone())).collect()
    }

    pub fn from_named(mut nets: NamedNets, priors: Priors) -> Result<Self> {
        let mut take = |role: NetRole| {
            nets.remove(role.name())
                .ok_or_else(|| Error::InvalidArgument(format!("checkpoint has no {role} net")))
        };
        Self::from_nets(
            [take(NetRole::Gp)?, take(NetRole::Gn)?, take(NetRole::Gy)?, take(NetRole::Dp)?, take(NetRole::Dn)?, take(NetRole::Dy)?],
            priors,
        )
    }

    /// G_y's score on one sample and the label it implies (`score ≥ 0.5` → 1).
    pub fn classify(&self, x: ArrayView1<f64>) -> Result<(f64, u8)> {
        classify(&self.g_y, x)
    }
}

pub fn classify(g_y: &NeuralNet, x: ArrayView1<f64>) -> Result<(f64, u8)> {
    let score = g_y.predict(x.insert_axis(ndarray::Axis(0)))?[[0, 0]];
    Ok((score, u8::from(score >= 0.5)))
}

/// Scores for every row of `batch`.
pub fn classify_batch(g_y: &NeuralNet, batch: ArrayView2<f64>) -> Result<(Array1<f64>, Vec<u8>)> {
    let scores = g_y.predict(batch)?.column(0).to_owned();
    let labels = scores.iter().map(|&s| u8::from(s >= 0.5)).collect();
    Ok((scores, labels))
}
