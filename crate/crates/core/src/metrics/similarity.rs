use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a generated vector picks the real sample it is compared against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    /// Nearest real sample under Euclidean distance.
    #[default]
    Nearest,
    /// A uniformly random real sample.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScores {
    pub cosine: f64,
    pub manhattan: f64,
    pub euclidean: f64,
    pub pairs: usize,
}

fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let (na, nb) = (a.dot(&a).sqrt(), b.dot(&b).sqrt());
    match (na > 0.0, nb > 0.0) {
        (true, true) => (a.dot(&b) / (na * nb)).clamp(-1.0, 1.0),
        (false, false) => 1.0,
        _ => 0.0,
    }
}

fn manhattan(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn squared_euclidean(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Draws `min(cap, |generated|)` generated rows without replacement, pairs
/// each with a real row, and averages cosine similarity, Manhattan and
/// Euclidean distance over the pairs.
pub fn similarity_report(
    real: ArrayView2<f64>,
    generated: ArrayView2<f64>,
    cap: usize,
    seed: u64,
    pairing: Pairing,
) -> Result<SimilarityScores> {
    if real.nrows() == 0 || generated.nrows() == 0 {
        return Err(Error::Empty("similarity inputs"));
    }
    if real.ncols() != generated.ncols() {
        return Err(Error::Shape("real and generated dimensions differ".into()));
    }
    if cap == 0 {
        return Err(Error::InvalidArgument("sample cap must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cap.min(generated.nrows());
    let mut picks = sample(&mut rng, generated.nrows(), n).into_vec();
    picks.sort_unstable();
    let partners: Vec<usize> = match pairing {
        Pairing::Random => picks.iter().map(|_| rng.random_range(0..real.nrows())).collect(),
        Pairing::Nearest => picks
            .par_iter()
            .map(|&g| {
                let gv = generated.row(g);
                let mut best = (f64::INFINITY, 0);
                for (r, rv) in real.axis_iter(Axis(0)).enumerate() {
                    let d = squared_euclidean(gv, rv);
                    if d < best.0 {
                        best = (d, r);
                    }
                }
                best.1
            })
            .collect(),
    };
    let (mut c, mut m, mut e) = (0.0, 0.0, 0.0);
    for (&g, &r) in picks.iter().zip(&partners) {
        let (gv, rv) = (generated.row(g), real.row(r));
        c += cosine(gv, rv);
        m += manhattan(gv, rv);
        e += squared_euclidean(gv, rv).sqrt();
    }
    let k = n as f64;
    Ok(SimilarityScores { cosine: c / k, manhattan: m / k, euclidean: e / k, pairs: n })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    /// `n × 2` coordinates on the top two principal axes.
    pub coords: Array2<f64>,
    /// Unit principal axes as rows (`2 × d`); a zeroed row marks a missing axis.
    pub axes: Array2<f64>,
    /// Covariance eigenvalues, descending (denominator `n - 1`).
    pub eigenvalues: Vec<f64>,
    pub mean: Vec<f64>,
    pub rank_deficient: bool,
}

/// Projects mean-centred data onto its top two principal axes. Each axis is
/// oriented so that its largest-magnitude loading is positive.
pub fn pca_project_2d(samples: ArrayView2<f64>) -> Result<PcaProjection> {
    let (n, d) = samples.dim();
    if n < 2 || d < 2 {
        return Err(Error::Shape(format!("PCA needs ≥2 samples of dimension ≥2, got {n}×{d}")));
    }
    if !samples.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("PCA input"));
    }
    let mean = samples.mean_axis(Axis(0)).expect("n ≥ 2");
    let centred = &samples - &mean;
    let cov = centred.t().dot(&centred) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |i, j| cov[[i, j]]));

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();

    let scale = eigenvalues[0].max(1.0);
    let mut axes = Array2::zeros((2, d));
    let mut rank_deficient = false;
    for (row, &col) in order.iter().take(2).enumerate() {
        if eigenvalues[row] <= 1e-12 * scale {
            rank_deficient = true;
            continue;
        }
        let v = eig.eigenvectors.column(col);
        let pivot = (0..d).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).expect("d ≥ 2");
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            axes[[row, j]] = sign * v[j];
        }
    }
    let coords = centred.dot(&axes.t());
    Ok(PcaProjection { coords, axes, eigenvalues, mean: mean.to_vec(), rank_deficient })
}
