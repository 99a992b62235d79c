//! Scalar objectives on discriminator probabilities, each returned together
//! with its gradient with respect to every probability it consumes.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::PROB_EPS;
use crate::priors::Priors;

/// A value and `∂value/∂input` for each probability vector, in argument order.
#[derive(Debug, Clone, PartialEq)]
pub struct Graded<const N: usize> {
    pub value: f64,
    pub grads: [Array1<f64>; N],
}

/// Which rule the class-label generator descends.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum GyLossMode {
    /// `-π_p·mean(ln D_y(G_p z)) - π_n·mean(ln D_y(G_n z))`. G_y does not
    /// appear in this expression, so its parameters receive zero gradient.
    #[serde(rename = "alg1-line14")]
    Alg1Line14,
    /// Soft-target cross-entropy with D_y's judgment of each generated sample
    /// as the target for G_y's output on it.
    #[default]
    #[serde(rename = "eq4")]
    Eq4,
}

impl std::str::FromStr for GyLossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alg1-line14" => Ok(GyLossMode::Alg1Line14),
            "eq4" => Ok(GyLossMode::Eq4),
            other => Err(Error::InvalidArgument(format!("unknown g_y loss mode {other:?}"))),
        }
    }
}

fn clamp_probs(name: &'static str, p: ArrayView1<f64>) -> Result<Array1<f64>> {
    if p.is_empty() {
        return Err(Error::Empty(name));
    }
    if !p.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite(name));
    }
    Ok(p.mapv(|v| v.clamp(PROB_EPS, 1.0 - PROB_EPS)))
}

fn mean(v: &Array1<f64>) -> f64 {
    v.sum() / v.len() as f64
}

/// `mean(ln p)` and its gradient.
pub fn mean_log(p: ArrayView1<f64>) -> Result<Graded<1>> {
    let p = clamp_probs("probabilities", p)?;
    let m = p.len() as f64;
    Ok(Graded { value: mean(&p.mapv(f64::ln)), grads: [p.mapv(|v| 1.0 / (m * v))] })
}

/// `mean(ln(1 - p))` and its gradient.
pub fn mean_log1m(p: ArrayView1<f64>) -> Result<Graded<1>> {
    let p = clamp_probs("probabilities", p)?;
    let m = p.len() as f64;
    Ok(Graded { value: mean(&p.mapv(|v| (1.0 - v).ln())), grads: [p.mapv(|v| -1.0 / (m * (1.0 - v)))] })
}

/// `mean(ln d_real) + mean(ln(1 - d_fake))`, the value a discriminator ascends.
pub fn gan_objective(d_real: ArrayView1<f64>, d_fake: ArrayView1<f64>) -> Result<Graded<2>> {
    let [a] = mean_log(d_real)?.split();
    let [b] = mean_log1m(d_fake)?.split();
    Ok(Graded { value: a.0 + b.0, grads: [a.1, b.1] })
}

/// `mean(ln d_real) + π_p·mean(ln(1 - d_gp)) + π_n·mean(ln(1 - d_gn))`, where
/// `d_real` is D_y on a batch from the mixed distribution.
pub fn d_y_objective(
    d_real: ArrayView1<f64>,
    d_gp: ArrayView1<f64>,
    d_gn: ArrayView1<f64>,
    priors: Priors,
) -> Result<Graded<3>> {
    let [r] = mean_log(d_real)?.split();
    let [p] = mean_log1m(d_gp)?.split();
    let [n] = mean_log1m(d_gn)?.split();
    let (pi_p, pi_n) = (priors.pi_p(), priors.pi_n());
    Ok(Graded {
        value: r.0 + pi_p * p.0 + pi_n * n.0,
        grads: [r.1, p.1 * pi_p, n.1 * pi_n],
    })
}

/// `π·mean(-ln d_own - ln d_y)`: the loss G_p (with D_p, π_p) or G_n (with
/// D_n, π_n) descends.
pub fn generator_loss(d_own: ArrayView1<f64>, d_y: ArrayView1<f64>, pi: f64) -> Result<Graded<2>> {
    let own = clamp_probs("own-discriminator probabilities", d_own)?;
    let dy = clamp_probs("D_y probabilities", d_y)?;
    if own.len() != dy.len() {
        return Err(Error::Shape("generator loss batches differ in length".into()));
    }
    if !(0.0..=1.0).contains(&pi) {
        return Err(Error::InvalidArgument(format!("prior {pi} outside [0, 1]")));
    }
    let m = own.len() as f64;
    let per: Array1<f64> = own.iter().zip(&dy).map(|(a, b)| -a.ln() - b.ln()).collect();
    Ok(Graded {
        value: pi * mean(&per),
        grads: [own.mapv(|v| -pi / (m * v)), dy.mapv(|v| -pi / (m * v))],
    })
}

pub fn g_p_loss(d_p_on_fake: ArrayView1<f64>, d_y_on_fake: ArrayView1<f64>, priors: Priors) -> Result<Graded<2>> {
    generator_loss(d_p_on_fake, d_y_on_fake, priors.pi_p())
}

pub fn g_n_loss(d_n_on_fake: ArrayView1<f64>, d_y_on_fake: ArrayView1<f64>, priors: Priors) -> Result<Graded<2>> {
    generator_loss(d_n_on_fake, d_y_on_fake, priors.pi_n())
}

/// G_y's loss. Gradients are ordered `[d_y_gp, d_y_gn, g_y_gp, g_y_gn]`.
///
/// In [`GyLossMode::Eq4`] `g_y` holds G_y's outputs on the same `G_p(z)` and
/// `G_n(z)` batches; D_y's score of each generated sample is the soft target
/// for the probability G_y assigns to the class that produced it:
///
/// ```text
/// -π_p·mean(t·ln g + (1-t)·ln(1-t))     t = D_y(G_p z), g = G_y(G_p z)
/// -π_n·mean(t·ln(1-g) + (1-t)·ln(1-t))  t = D_y(G_n z), g = G_y(G_n z)
/// ```
pub fn g_y_loss(
    d_y_gp: ArrayView1<f64>,
    d_y_gn: ArrayView1<f64>,
    priors: Priors,
    mode: GyLossMode,
    g_y: Option<(ArrayView1<f64>, ArrayView1<f64>)>,
) -> Result<Graded<4>> {
    let (pi_p, pi_n) = (priors.pi_p(), priors.pi_n());
    match mode {
        GyLossMode::Alg1Line14 => {
            let [p] = mean_log(d_y_gp)?.split();
            let [n] = mean_log(d_y_gn)?.split();
            let zeros = |v: Option<ArrayView1<f64>>| Array1::zeros(v.map_or(0, |v| v.len()));
            Ok(Graded {
                value: -pi_p * p.0 - pi_n * n.0,
                grads: [p.1 * -pi_p, n.1 * -pi_n, zeros(g_y.map(|g| g.0)), zeros(g_y.map(|g| g.1))],
            })
        }
        GyLossMode::Eq4 => {
            let (gy_gp, gy_gn) = g_y.ok_or_else(|| {
                Error::InvalidArgument("eq4 mode needs G_y outputs on the generated batches".into())
            })?;
            let (tp, gp) = (clamp_probs("D_y(G_p z)", d_y_gp)?, clamp_probs("G_y(G_p z)", gy_gp)?);
            let (tn, gn) = (clamp_probs("D_y(G_n z)", d_y_gn)?, clamp_probs("G_y(G_n z)", gy_gn)?);
            if tp.len() != gp.len() || tn.len() != gn.len() {
                return Err(Error::Shape("G_y and D_y batches differ in length".into()));
            }
            let (mp, mn) = (tp.len() as f64, tn.len() as f64);
            let pos = branch(&tp, &gp, |g| g.ln(), |g| 1.0 / g);
            let neg = branch(&tn, &gn, |g| (1.0 - g).ln(), |g| -1.0 / (1.0 - g));
            Ok(Graded {
                value: -(pi_p * pos.0 / mp + pi_n * neg.0 / mn),
                grads: [pos.1 * (-pi_p / mp), neg.1 * (-pi_n / mn), pos.2 * (-pi_p / mp), neg.2 * (-pi_n / mn)],
            })
        }
    }
}

/// `Σ t·f(g) + (1-t)·ln(1-t)`, with per-entry derivatives in `t` and `g`.
fn branch(
    t: &Array1<f64>,
    g: &Array1<f64>,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
) -> (f64, Array1<f64>, Array1<f64>) {
    let mut sum = 0.0;
    let mut dt = Array1::zeros(t.len());
    let mut dg = Array1::zeros(t.len());
    for i in 0..t.len() {
        let (ti, gi) = (t[i], g[i]);
        let l1m = (1.0 - ti).ln();
        sum += ti * f(gi) + (1.0 - ti) * l1m;
        dt[i] = f(gi) - l1m - 1.0;
        dg[i] = ti * df(gi);
    }
    (sum, dt, dg)
}

impl<const N: usize> Graded<N> {
    fn split(self) -> [(f64, Array1<f64>); N] {
        let value = self.value;
        self.grads.map(|g| (value, g))
    }
}
