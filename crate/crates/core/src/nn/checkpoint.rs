//! Versioned JSON checkpoints holding a named set of nets.
//!
//! ```text
//! { "version": 1,
//!   "nets": { "Gp": { "dims": [...], "activations": [...],
//!                     "weights": [[[...]]], "biases": [[...]] }, ... } }
//! ```
//!
//! Floats are written in shortest round-trip decimal form, so a save/load
//! cycle reproduces every parameter bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, Layer, NeuralNet};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

pub type NamedNets = BTreeMap<String, NeuralNet>;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    version: u32,
    nets: BTreeMap<String, NetRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetRecord {
    dims: Vec<usize>,
    activations: Vec<Activation>,
    weights: Vec<Vec<Vec<f64>>>,
    biases: Vec<Vec<f64>>,
}

impl From<&NeuralNet> for NetRecord {
    fn from(net: &NeuralNet) -> Self {
        NetRecord {
            dims: net.dims(),
            activations: net.activations(),
            weights: net
                .layers()
                .iter()
                .map(|l| l.weights().rows().into_iter().map(|r| r.to_vec()).collect())
                .collect(),
            biases: net.layers().iter().map(|l| l.biases().to_vec()).collect(),
        }
    }
}

impl NetRecord {
    fn into_net(self) -> std::result::Result<NeuralNet, String> {
        let n_layers = self.activations.len();
        if self.dims.len() != n_layers + 1 || self.weights.len() != n_layers || self.biases.len() != n_layers {
            return Err("dims/activations/weights/biases lengths disagree".into());
        }
        let mut layers = Vec::with_capacity(n_layers);
        for (k, ((rows, bias), act)) in self.weights.into_iter().zip(self.biases).zip(self.activations).enumerate() {
            let (fan_in, fan_out) = (self.dims[k], self.dims[k + 1]);
            if rows.len() != fan_out || rows.iter().any(|r| r.len() != fan_in) {
                return Err(format!("layer {k} weights are not {fan_out}x{fan_in}"));
            }
            let flat: Vec<f64> = rows.into_iter().flatten().collect();
            let w = Array2::from_shape_vec((fan_out, fan_in), flat).map_err(|e| e.to_string())?;
            let layer = Layer::new(w, Array1::from(bias), act).map_err(|e| format!("layer {k}: {e}"))?;
            layers.push(layer);
        }
        NeuralNet::from_layers(layers).map_err(|e| e.to_string())
    }
}

pub fn save_checkpoint(nets: &NamedNets, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = CheckpointFile {
        version: CHECKPOINT_VERSION,
        nets: nets.iter().map(|(k, v)| (k.clone(), NetRecord::from(v))).collect(),
    };
    let text = serde_json::to_string_pretty(&file).expect("checkpoint is always serializable");
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads every net or nothing.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<NamedNets> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |msg: String| Error::Checkpoint { path: path.to_path_buf(), msg };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
    let version = value
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| malformed("missing integer `version`".into()))?;
    if version != u64::from(CHECKPOINT_VERSION) {
        return Err(Error::CheckpointVersion {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            expected: CHECKPOINT_VERSION,
        });
    }
    let file: CheckpointFile = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
    file.nets
        .into_iter()
        .map(|(name, rec)| {
            let net = rec.into_net().map_err(|m| malformed(format!("net `{name}`: {m}")))?;
            Ok((name, net))
        })
        .collect()
}
