use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use super::{NeuralNet, ParamGrads};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "algorithm")]
pub enum OptimizerKind {
    PlainSgd,
    AdaptiveMoment { beta1: f64, beta2: f64, epsilon: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::AdaptiveMoment { beta1: 0.5, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl Default for OptimizerKind {
    fn default() -> Self {
        Self::adam()
    }
}

/// Discriminators ascend their objective, generators descend their loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Ascend,
    Descend,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Ascend => 1.0,
            Direction::Descend => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
struct Moments {
    weights: Array2<f64>,
    biases: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    kind: OptimizerKind,
    lr: f64,
    first: Vec<Moments>,
    second: Vec<Moments>,
    step: u64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, lr: f64, net: &NeuralNet) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {lr}")));
        }
        if let OptimizerKind::AdaptiveMoment { beta1, beta2, epsilon } = kind {
            let ok = (0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && epsilon > 0.0;
            if !ok {
                return Err(Error::InvalidArgument("adaptive-moment hyperparameters out of range".into()));
            }
        }
        let zeros = || {
            net.layers()
                .iter()
                .map(|l| Moments {
                    weights: Array2::zeros(l.weights().raw_dim()),
                    biases: Array1::zeros(l.biases().raw_dim()),
                })
                .collect::<Vec<_>>()
        };
        Ok(Self { kind, lr, first: zeros(), second: zeros(), step: 0 })
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    /// Moves `net` along `±grads`. Non-finite gradients (or an update that
    /// would produce non-finite parameters) leave both net and state untouched.
    pub fn step(&mut self, net: &mut NeuralNet, grads: &ParamGrads, direction: Direction) -> Result<()> {
        if !grads.is_congruent(net) || grads.layers.len() != self.first.len() {
            return Err(Error::Shape("gradients do not match the net".into()));
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradients"));
        }
        let sign = direction.sign();
        let mut updated = net.clone();
        let mut first = self.first.clone();
        let mut second = self.second.clone();
        let t = self.step + 1;

        for (k, layer) in updated.layers_mut().iter_mut().enumerate() {
            let g = &grads.layers[k];
            let (w, b) = layer.params_mut();
            match self.kind {
                OptimizerKind::PlainSgd => {
                    w.scaled_add(sign * self.lr, &g.weights);
                    b.scaled_add(sign * self.lr, &g.biases);
                }
                OptimizerKind::AdaptiveMoment { beta1, beta2, epsilon } => {
                    let c1 = 1.0 - beta1.powi(t as i32);
                    let c2 = 1.0 - beta2.powi(t as i32);
                    let lr = self.lr;
                    let update = |p: &mut f64, &gv: &f64, m: &mut f64, v: &mut f64| {
                        *m = beta1 * *m + (1.0 - beta1) * gv;
                        *v = beta2 * *v + (1.0 - beta2) * gv * gv;
                        let mhat = *m / c1;
                        let vhat = *v / c2;
                        *p += sign * lr * mhat / (vhat.sqrt() + epsilon);
                    };
                    Zip::from(&mut *w)
                        .and(&g.weights)
                        .and(&mut first[k].weights)
                        .and(&mut second[k].weights)
                        .for_each(update);
                    Zip::from(&mut *b)
                        .and(&g.biases)
                        .and(&mut first[k].biases)
                        .and(&mut second[k].biases)
                        .for_each(update);
                }
            }
        }
        if !updated.is_finite() {
            return Err(Error::NonFinite("parameters after update"));
        }
        *net = updated;
        self.first = first;
        self.second = second;
        self.step = t;
        Ok(())
    }
}
