//! Brute-force search for the generators' equilibrium on a simplex grid.
//!
//! For every pair `(p_gp, p_gn)` of grid distributions the discriminators are
//! replaced by their closed-form optima. The label game `v_star` alone is
//! minimized by any pair whose mixture matches `p`, so the reported minimizer
//! is taken from the joint objective (positive game + negative game + label
//! game), whose grid minimizer is unique whenever the targets lie on the grid.

use rayon::prelude::*;
use serde::Serialize;

use super::{optimal_discriminator, v_star, value_fn, DiscreteDist, EQUILIBRIUM_VALUE};
use crate::error::{Error, Result};
use crate::priors::Priors;

/// Largest support the grid enumeration accepts.
pub const MAX_SUPPORT: usize = 4;

const TIE_TOLERANCE: f64 = 1e-12;
const BOUND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumProblem {
    pub p_p: DiscreteDist,
    pub p_n: DiscreteDist,
    pub priors: Priors,
    pub grid_step: f64,
}

impl EquilibriumProblem {
    pub fn new(p_p: DiscreteDist, p_n: DiscreteDist, priors: Priors, grid_step: f64) -> Result<Self> {
        if p_p.len() != p_n.len() {
            return Err(Error::Distribution("p_p and p_n have different supports".into()));
        }
        if p_p.len() > MAX_SUPPORT {
            return Err(Error::InvalidArgument(format!(
                "support size {} exceeds the enumerable limit {MAX_SUPPORT}",
                p_p.len()
            )));
        }
        grid_divisions(grid_step)?;
        Ok(Self { p_p, p_n, priors, grid_step })
    }

    /// `p_p = e_0`, `p_n = e_1` on a two-point support, equal priors, step 0.05.
    pub fn two_point_default() -> Self {
        Self {
            p_p: DiscreteDist::point(2, 0).expect("valid"),
            p_n: DiscreteDist::point(2, 1).expect("valid"),
            priors: Priors::new(0.5, 0.5).expect("valid"),
            grid_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumConditions {
    /// `max |p_gp - p_p|` at the minimizer.
    pub positive_deviation: f64,
    /// `max |p_gn - p_n|` at the minimizer.
    pub negative_deviation: f64,
    /// `max |p - (π_p·p_gp + π_n·p_gn)|` at the minimizer.
    pub mixture_deviation: f64,
    pub tolerance: f64,
    pub positive_matches: bool,
    pub negative_matches: bool,
    pub mixture_matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub support_size: usize,
    pub grid_step: f64,
    pub grid_points: usize,
    pub pairs_evaluated: usize,
    /// Both targets are representable on the grid.
    pub targets_on_grid: bool,
    pub minimizer_p_gp: Vec<f64>,
    pub minimizer_p_gn: Vec<f64>,
    pub joint_value_at_minimizer: f64,
    pub v_star_at_minimizer: f64,
    pub v_star_grid_min: f64,
    /// Number of grid pairs attaining the `v_star` minimum.
    pub v_star_minimizers: usize,
    pub v_star_minimizer_non_unique: bool,
    pub equilibrium_value: f64,
    /// `v_star_at_minimizer - (-2 ln 2)`.
    pub gap: f64,
    /// Largest `|Δ v_star|` from the minimizer to a neighbouring grid pair.
    pub value_slack: f64,
    pub gap_within_slack: bool,
    /// The grid minimum is never below `-2 ln 2` (up to 1e-9).
    pub lower_bound_holds: bool,
    pub conditions: EquilibriumConditions,
    pub passed: bool,
}

fn grid_divisions(step: f64) -> Result<usize> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidArgument(format!("grid step must lie in (0, 1], got {step}")));
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("grid step {step} does not divide 1")));
    }
    Ok(n as usize)
}

/// All points of the simplex whose coordinates are multiples of `1/n`.
fn simplex_grid(k: usize, n: usize) -> Vec<DiscreteDist> {
    fn rec(k: usize, remaining: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k - 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in (0..=remaining).rev() {
            prefix.push(c);
            rec(k, remaining - c, prefix, out);
            prefix.pop();
        }
    }
    let mut counts = Vec::new();
    rec(k, n, &mut Vec::with_capacity(k), &mut counts);
    counts
        .into_iter()
        .map(|c| {
            let mass: Vec<f64> = c.iter().map(|&ci| ci as f64 / n as f64).collect();
            // Division by n keeps the sum within a few ulps of 1.
            DiscreteDist::new(mass).expect("grid point is a distribution")
        })
        .collect()
}

fn on_grid(d: &DiscreteDist, n: usize) -> bool {
    d.mass().iter().all(|m| {
        let scaled = m * n as f64;
        (scaled - scaled.round()).abs() <= 1e-9
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

struct Evaluator<'a> {
    problem: &'a EquilibriumProblem,
    p: DiscreteDist,
}

impl Evaluator<'_> {
    fn v_star(&self, gp: &DiscreteDist, gn: &DiscreteDist) -> f64 {
        v_star(&self.p, gp, gn, self.problem.priors).expect("supports checked")
    }

    fn joint(&self, gp: &DiscreteDist, gn: &DiscreteDist) -> f64 {
        let pr = self.problem;
        let dp = optimal_discriminator(&pr.p_p, gp).expect("supports checked");
        let dn = optimal_discriminator(&pr.p_n, gn).expect("supports checked");
        value_fn(&pr.p_p, gp, &dp).expect("supports checked")
            + value_fn(&pr.p_n, gn, &dn).expect("supports checked")
            + self.v_star(gp, gn)
    }
}

/// Lexicographic `(value, index)` minimum; independent of how work is split.
fn better(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if a.0 < b.0 || (a.0 == b.0 && a.1 < b.1) {
        a
    } else {
        b
    }
}

pub fn verify_equilibrium(problem: &EquilibriumProblem) -> Result<EquilibriumReport> {
    let k = problem.p_p.len();
    let n = grid_divisions(problem.grid_step)?;
    let grid = simplex_grid(k, n);
    let g = grid.len();
    let eval = Evaluator {
        problem,
        p: DiscreteDist::mixture(&problem.p_p, &problem.p_n, problem.priors)?,
    };

    let (v_min, joint_best) = (0..g * g)
        .into_par_iter()
        .map(|idx| {
            let (gp, gn) = (&grid[idx / g], &grid[idx % g]);
            ((eval.v_star(gp, gn), idx), (eval.joint(gp, gn), idx))
        })
        .reduce(
            || ((f64::INFINITY, usize::MAX), (f64::INFINITY, usize::MAX)),
            |a, b| (better(a.0, b.0), better(a.1, b.1)),
        );
    let v_star_grid_min = v_min.0;
    let v_star_minimizers = (0..g * g)
        .into_par_iter()
        .filter(|&idx| eval.v_star(&grid[idx / g], &grid[idx % g]) <= v_star_grid_min + TIE_TOLERANCE)
        .count();

    let (i, j) = (joint_best.1 / g, joint_best.1 % g);
    let (gp, gn) = (&grid[i], &grid[j]);
    let v_at = eval.v_star(gp, gn);

    // Neighbours: move one grid step of mass between two coordinates of
    // either distribution.
    let step = 1.0 / n as f64;
    let mut value_slack = 0.0f64;
    for which in 0..2 {
        let base = if which == 0 { gp } else { gn };
        for from in 0..k {
            for to in 0..k {
                if from == to || base.mass()[from] < step - 1e-12 {
                    continue;
                }
                let mut m = base.mass().to_vec();
                m[from] = ((m[from] - step) * n as f64).round() / n as f64;
                m[to] = ((m[to] + step) * n as f64).round() / n as f64;
                let Ok(nb) = DiscreteDist::new(m) else { continue };
                let v = if which == 0 { eval.v_star(&nb, gn) } else { eval.v_star(gp, &nb) };
                value_slack = value_slack.max((v - v_at).abs());
            }
        }
    }

    let tolerance = step;
    let mixed = DiscreteDist::mixture(gp, gn, problem.priors)?;
    let positive_deviation = max_abs_diff(gp.mass(), problem.p_p.mass());
    let negative_deviation = max_abs_diff(gn.mass(), problem.p_n.mass());
    let mixture_deviation = max_abs_diff(eval.p.mass(), mixed.mass());
    let conditions = EquilibriumConditions {
        positive_deviation,
        negative_deviation,
        mixture_deviation,
        tolerance,
        positive_matches: positive_deviation <= tolerance + 1e-12,
        negative_matches: negative_deviation <= tolerance + 1e-12,
        mixture_matches: mixture_deviation <= tolerance + 1e-12,
    };

    let gap = v_at - EQUILIBRIUM_VALUE;
    let gap_within_slack = gap.abs() <= value_slack + BOUND_TOLERANCE;
    let lower_bound_holds = v_star_grid_min >= EQUILIBRIUM_VALUE - BOUND_TOLERANCE;
    let passed = conditions.positive_matches
        && conditions.negative_matches
        && conditions.mixture_matches
        && gap_within_slack
        && lower_bound_holds;

    Ok(EquilibriumReport {
        support_size: k,
        grid_step: problem.grid_step,
        grid_points: g,
        pairs_evaluated: g * g,
        targets_on_grid: on_grid(&problem.p_p, n) && on_grid(&problem.p_n, n),
        minimizer_p_gp: gp.mass().to_vec(),
        minimizer_p_gn: gn.mass().to_vec(),
        joint_value_at_minimizer: joint_best.0,
        v_star_at_minimizer: v_at,
        v_star_grid_min,
        v_star_minimizers,
        v_star_minimizer_non_unique: v_star_minimizers > 1,
        equilibrium_value: EQUILIBRIUM_VALUE,
        gap,
        value_slack,
        gap_within_slack,
        lower_bound_holds,
        conditions,
        passed,
    })
}
