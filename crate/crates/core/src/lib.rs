//! Three-pair generative adversarial model for supported/refuted claim
//! learning, plus the tooling around it: a dense-network substrate, training
//! variants, a discrete equilibrium oracle, data pipelines and metrics.

pub mod data;
pub mod equilibrium;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod priors;
pub mod rng;
pub mod tri_gan;
pub mod variants;

pub use error::{Error, Result};
pub use priors::Priors;
