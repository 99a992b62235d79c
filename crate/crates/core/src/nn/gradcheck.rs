use ndarray::{Array2, ArrayView2};

use super::{NeuralNet, ParamGrads};
use crate::error::{Error, Result};

/// `|a - b| / max(|a|, |b|, 1e-12)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-12);
    (analytic - numeric).abs() / denom
}

/// Compares backprop against central differences for a loss defined on the
/// net's outputs. `loss` returns the scalar value and `∂loss/∂outputs`.
pub fn grad_check<L>(net: &NeuralNet, loss: L, batch: ArrayView2<f64>, eps: f64) -> Result<f64>
where
    L: Fn(ArrayView2<f64>) -> (f64, Array2<f64>),
{
    let (out, cache) = net.forward(batch)?;
    let (_, out_grad) = loss(out.view());
    let (grads, _) = net.backward(&cache, out_grad.view())?;
    grad_check_objective(net, &grads, eps, |n| {
        let out = n.predict(batch).expect("shape checked above");
        loss(out.view()).0
    })
}

/// Central-difference check of `analytic` against an arbitrary objective of
/// the net's parameters. Returns the maximum relative error over parameters.
pub fn grad_check_objective<F>(net: &NeuralNet, analytic: &ParamGrads, eps: f64, mut objective: F) -> Result<f64>
where
    F: FnMut(&NeuralNet) -> f64,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if !analytic.is_congruent(net) {
        return Err(Error::Shape("analytic gradients do not match the net".into()));
    }
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for (i, a) in analytic.iter().enumerate() {
        let original = net.param(i);
        probe.set_param(i, original + eps);
        let plus = objective(&probe);
        probe.set_param(i, original - eps);
        let minus = objective(&probe);
        probe.set_param(i, original);
        let numeric = (plus - minus) / (2.0 * eps);
        if !numeric.is_finite() {
            return Err(Error::NonFinite("finite-difference objective"));
        }
        worst = worst.max(relative_error(a, numeric));
    }
    Ok(worst)
}
