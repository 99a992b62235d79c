//! Dense multilayer perceptrons with hand-written reverse-mode gradients.
//!
//! Every network in the model (three generators, three discriminators) is a
//! [`NeuralNet`]: an ordered stack of affine layers, each followed by an
//! element-wise [`Activation`]. Batches are `m × input_dim` matrices with one
//! example per row.
//!
//! Logistic layers clamp their outputs to `[PROB_EPS, 1 - PROB_EPS]` so that
//! downstream `ln` terms stay finite.

mod checkpoint;
mod gradcheck;
mod optim;

pub use checkpoint::{load_checkpoint, save_checkpoint, NamedNets, CHECKPOINT_VERSION};
pub use gradcheck::{grad_check, grad_check_objective, relative_error};
pub use optim::{Direction, OptimizerKind, OptimizerState};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clamp applied to every probability before it reaches a logarithm.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Logistic,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Logistic => logistic(z).clamp(PROB_EPS, 1.0 - PROB_EPS),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output `y`.
    fn derivative(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Logistic => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// One affine layer `y = act(W x + b)` with `W` stored as `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weights: Array2<f64>,
    biases: Array1<f64>,
    activation: Activation,
}

impl Layer {
    pub fn new(weights: Array2<f64>, biases: Array1<f64>, activation: Activation) -> Result<Self> {
        if weights.nrows() != biases.len() {
            return Err(Error::Shape(format!(
                "weight rows {} != bias length {}",
                weights.nrows(),
                biases.len()
            )));
        }
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::Shape("layer dimensions must be positive".into()));
        }
        if !weights.iter().chain(biases.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("layer parameters"));
        }
        // Force standard layout so flat parameter indexing is row-major.
        let weights = weights.as_standard_layout().into_owned();
        Ok(Self { weights, biases, activation })
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn biases(&self) -> &Array1<f64> {
        &self.biases
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

/// Activations recorded by [`NeuralNet::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `values[0]` is the input batch, `values[k + 1]` the output of layer `k`.
    values: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.values.last().expect("cache always holds the input")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

/// Parameter gradients, shape-congruent with the owning net.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub layers: Vec<LayerGrads>,
}

impl ParamGrads {
    pub fn zeros_like(net: &NeuralNet) -> Self {
        let layers = net
            .layers
            .iter()
            .map(|l| LayerGrads {
                weights: Array2::zeros(l.weights.raw_dim()),
                biases: Array1::zeros(l.biases.raw_dim()),
            })
            .collect();
        Self { layers }
    }

    pub fn is_congruent(&self, net: &NeuralNet) -> bool {
        self.layers.len() == net.layers.len()
            && self.layers.iter().zip(&net.layers).all(|(g, l)| {
                g.weights.dim() == l.weights.dim() && g.biases.len() == l.biases.len()
            })
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(f64::is_finite)
    }

    /// Accumulates `other` into `self`.
    pub fn add_assign(&mut self, other: &ParamGrads) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::Shape("gradient layer counts differ".into()));
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            if a.weights.dim() != b.weights.dim() || a.biases.len() != b.biases.len() {
                return Err(Error::Shape("gradient shapes differ".into()));
            }
            a.weights += &b.weights;
            a.biases += &b.biases;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.layers {
            g.weights *= factor;
            g.biases *= factor;
        }
    }

    /// Flat view in the same order as [`NeuralNet::param`].
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|g| g.weights.iter().chain(g.biases.iter()).copied())
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralNet {
    layers: Vec<Layer>,
}

impl NeuralNet {
    /// Builds a net with `dims.len() - 1` layers. Weights are drawn from
    /// `N(0, 1/fan_in)`, biases start at zero.
    pub fn new(dims: &[usize], activations: &[Activation], seed: u64) -> Result<Self> {
        check_dims(dims, activations)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let normal = Normal::new(0.0, 1.0 / (fan_in as f64).sqrt())
                    .expect("fan-in is positive");
                let weights = Array2::from_shape_fn((fan_out, fan_in), |_| normal.sample(&mut rng));
                Layer::new(weights, Array1::zeros(fan_out), act)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }

    /// All-zero parameters; handy for tests and degenerate baselines.
    pub fn zeros(dims: &[usize], activations: &[Activation]) -> Result<Self> {
        check_dims(dims, activations)?;
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| Layer::new(Array2::zeros((w[1], w[0])), Array1::zeros(w[1]), act))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("a net needs at least one layer".into()));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::Shape(format!(
                    "layer {k} emits {} values but layer {} expects {}",
                    pair[0].output_dim(),
                    k + 1,
                    pair[1].input_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Layer::output_dim))
            .collect()
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(Layer::activation).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.biases.iter()).all(|v| v.is_finite()))
    }

    /// Flat parameter access: per layer, weights row-major then biases.
    pub fn param(&self, index: usize) -> f64 {
        let (layer, offset) = self.locate(index);
        let l = &self.layers[layer];
        if offset < l.weights.len() {
            l.weights.as_slice().expect("standard layout")[offset]
        } else {
            l.biases[offset - l.weights.len()]
        }
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        let (layer, offset) = self.locate(index);
        let l = &mut self.layers[layer];
        let nw = l.weights.len();
        if offset < nw {
            l.weights.as_slice_mut().expect("standard layout")[offset] = value;
        } else {
            l.biases[offset - nw] = value;
        }
    }

    fn locate(&self, mut index: usize) -> (usize, usize) {
        for (k, l) in self.layers.iter().enumerate() {
            let n = l.param_count();
            if index < n {
                return (k, index);
            }
            index -= n;
        }
        panic!("parameter index out of range");
    }

    /// Runs the batch through every layer, keeping activations for
    /// [`NeuralNet::backward`].
    pub fn forward(&self, batch: ArrayView2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        if batch.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "batch has {} columns, net expects {}",
                batch.ncols(),
                self.input_dim()
            )));
        }
        if !batch.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("forward input"));
        }
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(batch.to_owned());
        for layer in &self.layers {
            let prev = values.last().expect("non-empty");
            let mut z = prev.dot(&layer.weights.t());
            z += &layer.biases;
            let act = layer.activation;
            z.mapv_inplace(|v| act.apply(v));
            values.push(z);
        }
        let out = values.last().expect("non-empty").clone();
        Ok((out, ForwardCache { values }))
    }

    /// Forward pass without keeping the cache.
    pub fn predict(&self, batch: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.forward(batch).map(|(out, _)| out)
    }

    /// Reverse-mode pass. `output_grad` is `∂L/∂output` for the batch that
    /// produced `cache`. Returns the parameter gradients and `∂L/∂input`.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_grad: ArrayView2<f64>,
    ) -> Result<(ParamGrads, Array2<f64>)> {
        if cache.values.len() != self.layers.len() + 1 {
            return Err(Error::Shape("cache does not belong to this net".into()));
        }
        let out = cache.output();
        if output_grad.dim() != out.dim() {
            return Err(Error::Shape(format!(
                "output gradient {:?} vs output {:?}",
                output_grad.dim(),
                out.dim()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = output_grad.to_owned();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let act = layer.activation;
            let y = &cache.values[k + 1];
            if y.dim() != (upstream.nrows(), layer.output_dim()) {
                return Err(Error::Shape("cache does not belong to this net".into()));
            }
            let mut delta = upstream;
            delta.zip_mut_with(y, |d, &yv| *d *= act.derivative(yv));
            let input = &cache.values[k];
            let weights = delta.t().dot(input);
            let biases = delta.sum_axis(Axis(0));
            upstream = delta.dot(&layer.weights);
            grads.push(LayerGrads { weights, biases });
        }
        grads.reverse();
        Ok((ParamGrads { layers: grads }, upstream))
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }
}

impl Layer {
    pub(crate) fn params_mut(&mut self) -> (&mut Array2<f64>, &mut Array1<f64>) {
        (&mut self.weights, &mut self.biases)
    }
}

fn check_dims(dims: &[usize], activations: &[Activation]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::Shape("need at least input and output dimensions".into()));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::Shape("layer dimensions must be positive".into()));
    }
    if activations.len() != dims.len() - 1 {
        return Err(Error::Shape(format!(
            "{} activations for {} layers",
            activations.len(),
            dims.len() - 1
        )));
    }
    Ok(())
}

/// `input → hidden… → output`, one activation shared by the hidden layers.
pub fn mlp(
    input_dim: usize,
    hidden: &[usize],
    output_dim: usize,
    hidden_act: Activation,
    output_act: Activation,
    seed: u64,
) -> Result<NeuralNet> {
    let dims: Vec<usize> = std::iter::once(input_dim)
        .chain(hidden.iter().copied())
        .chain(std::iter::once(output_dim))
        .collect();
    let mut acts = vec![hidden_act; hidden.len()];
    acts.push(output_act);
    NeuralNet::new(&dims, &acts, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn init_is_deterministic() {
        let acts = [Activation::Relu, Activation::Logistic];
        let a = NeuralNet::new(&[2, 4, 1], &acts, 7).unwrap();
        let b = NeuralNet::new(&[2, 4, 1], &acts, 7).unwrap();
        assert_eq!(a, b);
        let c = NeuralNet::new(&[2, 4, 1], &acts, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_biases_are_zero() {
        let net = NeuralNet::new(&[3, 3], &[Activation::Identity], 1).unwrap();
        assert_eq!(net.layers()[0].biases(), &Array1::<f64>::zeros(3));
    }

    #[test]
    fn init_scale_follows_fan_in() {
        // Pool the weights of many inits so the sample std is well estimated.
        let acts = [Activation::Relu, Activation::Logistic];
        let mut first = Vec::new();
        for s in 0..200u64 {
            let net = NeuralNet::new(&[2, 8, 1], &acts, 7 + s).unwrap();
            first.extend(net.layers()[0].weights().iter().copied());
        }
        let n = first.len() as f64;
        let mean = first.iter().sum::<f64>() / n;
        let std = (first.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let target = 1.0 / 2f64.sqrt();
        assert!((std - target).abs() / target < 0.25, "std {std}");

        let single = NeuralNet::new(&[2, 8, 1], &acts, 7).unwrap();
        let w = single.layers()[0].weights();
        let m = w.mean().unwrap();
        let s = (w.mapv(|v| (v - m).powi(2)).sum() / (w.len() as f64 - 1.0)).sqrt();
        assert!((s - target).abs() / target < 0.25, "single-draw std {s}");
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        assert!(matches!(
            NeuralNet::new(&[2, 4, 1], &[Activation::Relu], 0),
            Err(Error::Shape(_))
        ));
        assert!(NeuralNet::new(&[2], &[], 0).is_err());
        assert!(NeuralNet::new(&[2, 0, 1], &[Activation::Relu, Activation::Relu], 0).is_err());
        let l1 = Layer::new(Array2::zeros((3, 2)), Array1::zeros(3), Activation::Relu).unwrap();
        let l2 = Layer::new(Array2::zeros((1, 4)), Array1::zeros(1), Activation::Relu).unwrap();
        assert!(NeuralNet::from_layers(vec![l1, l2]).is_err());
    }

    #[test]
    fn zero_logistic_net_emits_half() {
        let net = NeuralNet::zeros(&[3, 5, 1], &[Activation::Tanh, Activation::Logistic]).unwrap();
        let out = net.predict(array![[1.0, -2.0, 3.0], [0.0, 0.0, 9.0]].view()).unwrap();
        assert!(out.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let layer = Layer::new(Array2::eye(3), Array1::zeros(3), Activation::Identity).unwrap();
        let net = NeuralNet::from_layers(vec![layer]).unwrap();
        let x = array![[1.5, -2.0, 0.25]];
        assert_eq!(net.predict(x.view()).unwrap(), x);
    }

    #[test]
    fn scalar_logistic_layer() {
        let layer = Layer::new(array![[2.0]], array![1.0], Activation::Logistic).unwrap();
        let net = NeuralNet::from_layers(vec![layer]).unwrap();
        let out = net.predict(array![[0.5]].view()).unwrap();
        assert_abs_diff_eq!(out[[0, 0]], 0.880797, epsilon = 1e-6);
    }

    #[test]
    fn logistic_outputs_are_clamped() {
        let layer = Layer::new(array![[1000.0]], array![0.0], Activation::Logistic).unwrap();
        let net = NeuralNet::from_layers(vec![layer]).unwrap();
        let out = net.predict(array![[1.0], [-1.0]].view()).unwrap();
        assert_eq!(out[[0, 0]], 1.0 - PROB_EPS);
        assert_eq!(out[[1, 0]], PROB_EPS);
    }

    #[test]
    fn forward_rejects_bad_input() {
        let net = NeuralNet::new(&[2, 1], &[Activation::Identity], 0).unwrap();
        assert!(matches!(net.forward(array![[1.0, 2.0, 3.0]].view()), Err(Error::Shape(_))));
        assert!(matches!(
            net.forward(array![[1.0, f64::NAN]].view()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn zero_output_grad_gives_zero_grads() {
        let net = mlp(3, &[5], 2, Activation::Tanh, Activation::Identity, 3).unwrap();
        let x = array![[0.1, 0.2, 0.3], [1.0, -1.0, 0.5]];
        let (out, cache) = net.forward(x.view()).unwrap();
        let (g, gin) = net.backward(&cache, Array2::zeros(out.raw_dim()).view()).unwrap();
        assert_eq!(g.max_abs(), 0.0);
        assert!(gin.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_linear_layer_squared_error() {
        // L = (w·x + b - y)^2  ⇒  ∂L/∂w = 2(ŷ - y) x,  ∂L/∂b = 2(ŷ - y)
        let layer = Layer::new(array![[0.5, -1.0]], array![0.25], Activation::Identity).unwrap();
        let net = NeuralNet::from_layers(vec![layer]).unwrap();
        let x = array![[2.0, 3.0]];
        let y = 1.0;
        let (out, cache) = net.forward(x.view()).unwrap();
        let yhat = out[[0, 0]];
        assert_abs_diff_eq!(yhat, 0.5 * 2.0 - 3.0 + 0.25);
        let (g, _) = net.backward(&cache, array![[2.0 * (yhat - y)]].view()).unwrap();
        let r = 2.0 * (yhat - y);
        assert_abs_diff_eq!(g.layers[0].weights[[0, 0]], r * 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.layers[0].weights[[0, 1]], r * 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.layers[0].biases[0], r, epsilon = 1e-12);
    }

    #[test]
    fn backward_rejects_mismatched_grad() {
        let net = mlp(2, &[3], 1, Activation::Relu, Activation::Logistic, 0).unwrap();
        let (_, cache) = net.forward(array![[1.0, 2.0]].view()).unwrap();
        assert!(net.backward(&cache, Array2::zeros((2, 1)).view()).is_err());
        let other = mlp(2, &[4, 4], 1, Activation::Relu, Activation::Logistic, 0).unwrap();
        assert!(other.backward(&cache, Array2::zeros((1, 1)).view()).is_err());
    }

    #[test]
    fn flat_param_indexing_round_trips() {
        let mut net = mlp(2, &[3], 1, Activation::Relu, Activation::Logistic, 9).unwrap();
        let n = net.param_count();
        assert_eq!(n, 2 * 3 + 3 + 3 + 1);
        net.set_param(n - 1, 4.5);
        assert_eq!(net.layers()[1].biases()[0], 4.5);
        net.set_param(1, -2.0);
        assert_eq!(net.layers()[0].weights()[[0, 1]], -2.0);
        assert_eq!(net.param(1), -2.0);
    }
}
