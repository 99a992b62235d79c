//! Closed-form optimal discriminators and equilibrium values over finite
//! discrete supports.
//!
//! With densities replaced by probability mass functions every expectation
//! becomes a finite sum, so the optimal-discriminator formulas and the value
//! of the game at equilibrium can be checked exactly. All logarithms are
//! natural; the equilibrium value of each game is `2·ln(1/2) = -ln 4`.

mod grid;

pub use grid::{verify_equilibrium, EquilibriumConditions, EquilibriumProblem, EquilibriumReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::PROB_EPS;
use crate::priors::Priors;

/// `-ln 4`, the value of a two-term game at equilibrium.
pub const EQUILIBRIUM_VALUE: f64 = -std::f64::consts::LN_2 * 2.0;

const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteDist {
    mass: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::Distribution("support must have at least one point".into()));
        }
        if let Some(bad) = mass.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::Distribution(format!("mass {bad} is not a finite non-negative number")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Distribution(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { mass })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Distribution("weights must be non-negative with a positive sum".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn point(k: usize, at: usize) -> Result<Self> {
        if at >= k {
            return Err(Error::Distribution(format!("point {at} outside support of size {k}")));
        }
        let mut mass = vec![0.0; k];
        mass[at] = 1.0;
        Self::new(mass)
    }

    /// `π_p·a + π_n·b`, pointwise.
    pub fn mixture(a: &DiscreteDist, b: &DiscreteDist, priors: Priors) -> Result<Self> {
        same_support(a, b)?;
        Self::new(
            a.mass
                .iter()
                .zip(&b.mass)
                .map(|(x, y)| priors.pi_p() * x + priors.pi_n() * y)
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }
}

impl TryFrom<Vec<f64>> for DiscreteDist {
    type Error = Error;

    fn try_from(mass: Vec<f64>) -> Result<Self> {
        Self::new(mass)
    }
}

impl From<DiscreteDist> for Vec<f64> {
    fn from(d: DiscreteDist) -> Self {
        d.mass
    }
}

fn same_support(a: &DiscreteDist, b: &DiscreteDist) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Distribution(format!("support sizes differ: {} vs {}", a.len(), b.len())));
    }
    Ok(())
}

/// A discriminator tabulated on the support, entries in `[ε, 1-ε]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscriminatorVector {
    values: Vec<f64>,
    /// Points where both masses vanish; assigned 0.5.
    undefined: Vec<usize>,
}

impl DiscriminatorVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("discriminator values"));
        }
        let values = values.into_iter().map(clamp_prob).collect();
        Ok(Self { values, undefined: Vec::new() })
    }

    pub fn constant(k: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; k])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn undefined_points(&self) -> &[usize] {
        &self.undefined
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn clamp_prob(v: f64) -> f64 {
    v.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Maximizer of `a·ln t + b·ln(1-t)` over `t ∈ (0,1)`: `a / (a + b)`.
pub fn optimal_t_binary(a: f64, b: f64) -> Result<f64> {
    check_weights(&[a, b])?;
    Ok(a / (a + b))
}

/// Maximizer of `a·ln t + (b + c)·ln(1-t)`: `a / (a + b + c)`.
pub fn optimal_t_ternary(a: f64, b: f64, c: f64) -> Result<f64> {
    check_weights(&[a, b, c])?;
    // (b + c) is commutative in IEEE arithmetic, so swapping b and c is exact.
    Ok(a / (a + (b + c)))
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument("weights must be finite and non-negative".into()));
    }
    if w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidArgument("weights are all zero; the optimum is undefined".into()));
    }
    Ok(())
}

/// Pointwise `p_real / (p_real + p_fake)`; points with no mass under either
/// distribution get 0.5 and are recorded as undefined.
pub fn optimal_discriminator(p_real: &DiscreteDist, p_fake: &DiscreteDist) -> Result<DiscriminatorVector> {
    same_support(p_real, p_fake)?;
    let mut undefined = Vec::new();
    let values = p_real
        .mass
        .iter()
        .zip(&p_fake.mass)
        .enumerate()
        .map(|(x, (&a, &b))| {
            if a + b > 0.0 {
                clamp_prob(a / (a + b))
            } else {
                undefined.push(x);
                0.5
            }
        })
        .collect();
    Ok(DiscriminatorVector { values, undefined })
}

/// `(D_p*, D_n*)` for the positive and negative games.
pub fn optimal_discriminators(
    p_p: &DiscreteDist,
    p_gp: &DiscreteDist,
    p_n: &DiscreteDist,
    p_gn: &DiscreteDist,
) -> Result<(DiscriminatorVector, DiscriminatorVector)> {
    same_support(p_p, p_n)?;
    Ok((optimal_discriminator(p_p, p_gp)?, optimal_discriminator(p_n, p_gn)?))
}

/// `Σ p_real·ln D + Σ p_fake·ln(1 - D)`; zero-mass terms contribute nothing.
pub fn value_fn(p_real: &DiscreteDist, p_fake: &DiscreteDist, d: &DiscriminatorVector) -> Result<f64> {
    same_support(p_real, p_fake)?;
    if d.len() != p_real.len() {
        return Err(Error::Distribution("discriminator and support sizes differ".into()));
    }
    Ok(p_real
        .mass
        .iter()
        .zip(&p_fake.mass)
        .zip(&d.values)
        .map(|((&r, &f), &dv)| weighted_ln(r, dv) + weighted_ln(f, 1.0 - dv))
        .sum())
}

fn weighted_ln(weight: f64, prob: f64) -> f64 {
    if weight > 0.0 {
        weight * prob.ln()
    } else {
        0.0
    }
}

/// Label-game value with the optimal `D_y*` substituted:
///
/// `Σ p·ln(p/(p+q)) + π_p Σ p_gp·ln(q/(p+q)) + π_n Σ p_gn·ln(q/(p+q))`,
/// `q = π_p·p_gp + π_n·p_gn`.
pub fn v_star(p: &DiscreteDist, p_gp: &DiscreteDist, p_gn: &DiscreteDist, priors: Priors) -> Result<f64> {
    same_support(p, p_gp)?;
    same_support(p, p_gn)?;
    let (pi_p, pi_n) = (priors.pi_p(), priors.pi_n());
    let mut total = 0.0;
    for x in 0..p.len() {
        let a = p.mass[x];
        let b = pi_p * p_gp.mass[x];
        let c = pi_n * p_gn.mass[x];
        if a + b + c == 0.0 {
            continue;
        }
        let d = clamp_prob(optimal_t_ternary(a, b, c)?);
        total += weighted_ln(a, d) + pi_p * weighted_ln(p_gp.mass[x], 1.0 - d) + pi_n * weighted_ln(p_gn.mass[x], 1.0 - d);
    }
    Ok(total)
}

/// `KL(p‖q)` in nats, `0·ln 0 = 0`. Infinite when `p` has mass where `q` has none.
pub fn kl(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    same_support(p, q)?;
    Ok(p.mass
        .iter()
        .zip(&q.mass)
        .map(|(&a, &b)| match (a > 0.0, b > 0.0) {
            (false, _) => 0.0,
            (true, false) => f64::INFINITY,
            (true, true) => a * (a / b).ln(),
        })
        .sum())
}

/// Jensen–Shannon divergence in nats; bounded by `ln 2`.
pub fn jsd(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    same_support(p, q)?;
    let half = Priors::new(0.5, 0.5).expect("valid");
    let m = DiscreteDist::mixture(p, q, half)?;
    Ok((0.5 * kl(p, &m)? + 0.5 * kl(q, &m)?).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dist(m: &[f64]) -> DiscreteDist {
        DiscreteDist::new(m.to_vec()).unwrap()
    }

    /// Grid oracle for `max_t a·ln t + b·ln(1-t)`.
    fn grid_argmax(f: impl Fn(f64) -> f64, step: f64) -> f64 {
        let n = (1.0 / step).round() as usize;
        (1..n)
            .map(|i| i as f64 * step)
            .fold((f64::NAN, f64::NEG_INFINITY), |(bt, bv), t| {
                let v = f(t);
                if v > bv { (t, v) } else { (bt, bv) }
            })
            .0
    }

    #[test]
    fn dist_validation() {
        assert!(DiscreteDist::new(vec![]).is_err());
        assert!(DiscreteDist::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDist::new(vec![-0.5, 1.5]).is_err());
        assert!(DiscreteDist::new(vec![0.25; 4]).is_ok());
        assert_eq!(DiscreteDist::from_weights(&[1.0, 3.0]).unwrap().mass(), &[0.25, 0.75]);
    }

    #[test]
    fn binary_optimum() {
        assert_eq!(optimal_t_binary(1.0, 1.0).unwrap(), 0.5);
        assert_eq!(optimal_t_binary(3.0, 1.0).unwrap(), 0.75);
        let t = optimal_t_binary(0.2, 0.7).unwrap();
        assert_abs_diff_eq!(t, 0.222222, epsilon = 1e-6);
        let g = grid_argmax(|t| 0.2 * t.ln() + 0.7 * (1.0 - t).ln(), 1e-4);
        assert!((g - t).abs() <= 1e-3);
        assert!(optimal_t_binary(0.0, 0.0).is_err());
        assert!(optimal_t_binary(-1.0, 2.0).is_err());
    }

    #[test]
    fn ternary_optimum() {
        assert_abs_diff_eq!(optimal_t_ternary(1.0, 1.0, 1.0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(optimal_t_ternary(1.0, 0.0, 0.0).unwrap(), 1.0);
        let t = optimal_t_ternary(0.5, 0.3, 0.2).unwrap();
        assert_abs_diff_eq!(t, 0.5, epsilon = 1e-15);
        let g = grid_argmax(|t| 0.5 * t.ln() + 0.3 * (1.0 - t).ln() + 0.2 * (1.0 - t).ln(), 1e-4);
        assert!((g - t).abs() <= 1e-3);
        assert!(optimal_t_ternary(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn optimal_discriminator_cases() {
        let p = dist(&[0.6, 0.4]);
        let (dp, _) = optimal_discriminators(&p, &p, &p, &p).unwrap();
        assert_eq!(dp.values(), &[0.5, 0.5]);

        let d = optimal_discriminator(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap();
        assert_eq!(d.values(), &[1.0 - PROB_EPS, PROB_EPS]);

        let d = optimal_discriminator(&dist(&[0.6, 0.4]), &dist(&[0.2, 0.8])).unwrap();
        assert_abs_diff_eq!(d.values()[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(d.values()[1], 1.0 / 3.0, epsilon = 1e-15);
        // Per-point grid maximization of the integrand agrees.
        for (x, (&a, &b)) in [0.6, 0.4].iter().zip(&[0.2, 0.8]).enumerate() {
            let g = grid_argmax(|t| a * t.ln() + b * (1.0 - t).ln(), 1e-4);
            assert!((g - d.values()[x]).abs() <= 1e-3);
        }

        let d = optimal_discriminator(&dist(&[1.0, 0.0, 0.0]), &dist(&[0.5, 0.0, 0.5])).unwrap();
        assert_eq!(d.undefined_points(), &[1]);
        assert_eq!(d.values()[1], 0.5);

        assert!(optimal_discriminator(&dist(&[1.0]), &dist(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn value_fn_cases() {
        let half = DiscriminatorVector::constant(2, 0.5).unwrap();
        let v = value_fn(&dist(&[0.3, 0.7]), &dist(&[0.9, 0.1]), &half).unwrap();
        assert_abs_diff_eq!(v, -1.386294, epsilon = 1e-6);

        let p = dist(&[0.2, 0.5, 0.3]);
        let d = optimal_discriminator(&p, &p).unwrap();
        assert_abs_diff_eq!(value_fn(&p, &p, &d).unwrap(), -(4f64.ln()), epsilon = 1e-15);

        let d = DiscriminatorVector::new(vec![0.75, 1.0 / 3.0]).unwrap();
        let v = value_fn(&dist(&[0.6, 0.4]), &dist(&[0.2, 0.8]), &d).unwrap();
        let expected = 0.6 * 0.75f64.ln() + 0.4 * (1.0f64 / 3.0).ln() + 0.2 * 0.25f64.ln() + 0.8 * (2.0f64 / 3.0).ln();
        assert_abs_diff_eq!(v, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(v, -1.213685, epsilon = 1e-5);
    }

    #[test]
    fn v_star_cases() {
        let priors = Priors::new(0.3, 0.7).unwrap();
        let gp = dist(&[0.1, 0.6, 0.3]);
        let gn = dist(&[0.5, 0.25, 0.25]);
        let p = DiscreteDist::mixture(&gp, &gn, priors).unwrap();
        assert_abs_diff_eq!(v_star(&p, &gp, &gn, priors).unwrap(), EQUILIBRIUM_VALUE, epsilon = 1e-12);

        let one = Priors::new(1.0, 0.0).unwrap();
        assert_abs_diff_eq!(v_star(&gp, &gp, &gn, one).unwrap(), -1.386294, epsilon = 1e-6);

        let v = v_star(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0]), &dist(&[0.0, 1.0]), Priors::new(0.5, 0.5).unwrap())
            .unwrap();
        assert!(v.abs() < 1e-6, "disjoint supremum {v}");
    }

    #[test]
    fn jsd_cases() {
        let p = dist(&[0.2, 0.8]);
        assert_eq!(jsd(&p, &p).unwrap(), 0.0);
        assert_abs_diff_eq!(jsd(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap(), std::f64::consts::LN_2, epsilon = 1e-15);
        // ½[0.5 ln(0.5/0.75) + 0.5 ln(0.5/0.25)] + ½[1·ln(1/0.75)]
        let expected = 0.5 * (0.5 * (0.5f64 / 0.75).ln() + 0.5 * 2f64.ln()) + 0.5 * (1.0f64 / 0.75).ln();
        let v = jsd(&dist(&[0.5, 0.5]), &dist(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(v, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.215761, epsilon = 1e-5);
        assert!(jsd(&p, &dist(&[1.0])).is_err());
    }

    #[test]
    fn two_term_game_is_minus_ln4_plus_twice_jsd() {
        let p = dist(&[0.1, 0.2, 0.7]);
        let g = dist(&[0.4, 0.4, 0.2]);
        let d = optimal_discriminator(&p, &g).unwrap();
        let v = value_fn(&p, &g, &d).unwrap();
        assert_abs_diff_eq!(v, EQUILIBRIUM_VALUE + 2.0 * jsd(&p, &g).unwrap(), epsilon = 1e-12);
    }
}
