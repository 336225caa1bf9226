//! Exact t-SNE for a few hundred points.
//!
//! Gaussian input affinities with per-point bandwidth chosen by bisection on
//! perplexity, Student-t output affinities, plain momentum gradient descent
//! with early exaggeration.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{FeatureTable, Survival};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Floor applied to output affinities and their normaliser.
const Q_FLOOR: f64 = 1e-12;
const PERPLEXITY_TOL: f64 = 1e-4;
const MAX_BISECTIONS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsneParams {
    pub perplexity: f64,
    pub n_iter: usize,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch_iter: usize,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity: 30.0,
            n_iter: 1000,
            early_exaggeration: 4.0,
            exaggeration_iters: 100,
            learning_rate: 200.0,
            momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch_iter: 250,
            init_std: 1e-4,
            seed: 0,
        }
    }
}

impl TsneParams {
    fn validate(&self, n: usize) -> Result<()> {
        check_perplexity(self.perplexity, n)?;
        let positive = [
            self.early_exaggeration,
            self.learning_rate,
            self.init_std,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter("t-SNE parameters must be positive and finite"));
        }
        if !(0.0..1.0).contains(&self.momentum) || !(0.0..1.0).contains(&self.final_momentum) {
            return Err(Error::InvalidParameter("momentum must lie in [0, 1)"));
        }
        if self.n_iter == 0 {
            return Err(Error::InvalidParameter("iteration count must be positive"));
        }
        Ok(())
    }
}

fn check_perplexity(perplexity: f64, n: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::TooFew { needed: 4, actual: n });
    }
    if !(perplexity > 0.0 && perplexity < (n - 1) as f64 / 3.0) {
        return Err(Error::InfeasiblePerplexity { perplexity, n });
    }
    Ok(())
}

fn squared_distances(x: &Matrix) -> Vec<f64> {
    let n = x.rows();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Fills `out` with `exp(-beta · (d_j − d_min))`, normalised, and returns the
/// row's perplexity `exp(H)`.
fn gaussian_row(dist: &[f64], skip: usize, beta: f64, out: &mut [f64]) -> f64 {
    let d_min = dist
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != skip)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for (j, (&d, o)) in dist.iter().zip(out.iter_mut()).enumerate() {
        if j == skip {
            *o = 0.0;
            continue;
        }
        let shifted = d - d_min;
        let w = libm::exp(-beta * shifted);
        *o = w;
        sum += w;
        weighted += w * shifted;
    }
    out.iter_mut().for_each(|o| *o /= sum);
    libm::exp(libm::log(sum) + beta * weighted / sum)
}

/// Row-stochastic conditional affinities `p(j | i)`, row-major `N × N`.
pub fn conditional_affinities(x: &Matrix, perplexity: f64) -> Result<Vec<f64>> {
    let n = x.rows();
    check_perplexity(perplexity, n)?;
    let dist = squared_distances(x);
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        let row_d = &dist[i * n..(i + 1) * n];
        let out = &mut p[i * n..(i + 1) * n];
        let spread: f64 = row_d.iter().sum::<f64>() / (n - 1) as f64;
        let mut beta = if spread > 0.0 { 1.0 / spread } else { 1.0 };
        let mut lo = 0.0;
        let mut hi = f64::INFINITY;
        for _ in 0..MAX_BISECTIONS {
            let perp = gaussian_row(row_d, i, beta, out);
            if libm::fabs(perp - perplexity) < PERPLEXITY_TOL {
                break;
            }
            if perp > perplexity {
                lo = beta;
                beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
        gaussian_row(row_d, i, beta, out);
    }
    Ok(p)
}

/// Symmetrised joint affinities `(p(j|i) + p(i|j)) / 2N`, row-major `N × N`.
pub fn pairwise_affinities(x: &Matrix, perplexity: f64) -> Result<Vec<f64>> {
    let n = x.rows();
    let cond = conditional_affinities(x, perplexity)?;
    let mut p = vec![0.0; n * n];
    let denom = 2.0 * n as f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (cond[i * n + j] + cond[j * n + i]) / denom;
            p[i * n + j] = v;
            p[j * n + i] = v;
        }
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    pub coords: Vec<[f64; 2]>,
    /// `(iterations completed, KL(P‖Q))` at the logged checkpoints.
    pub kl_trace: Vec<(usize, f64)>,
    /// KL once early exaggeration has ended.
    pub kl_start: f64,
    pub kl_final: f64,
}

/// Student-t numerators `1 / (1 + ‖y_i − y_j‖²)` and their off-diagonal sum.
fn student_t(y: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = y.len();
    let mut num = vec![0.0; n * n];
    let mut z = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let v = 1.0 / (1.0 + dx * dx + dy * dy);
            num[i * n + j] = v;
            num[j * n + i] = v;
            z += 2.0 * v;
        }
    }
    (num, z.max(Q_FLOOR))
}

/// KL(P‖Q) for the embedding `y`.
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let (num, z) = student_t(y);
    p.iter()
        .zip(&num)
        .filter(|(&pij, _)| pij > 0.0)
        .map(|(&pij, &nij)| pij * libm::log(pij / (nij / z).max(Q_FLOOR)))
        .sum()
}

/// Seeded isotropic Gaussian start, drawn by Box–Muller from ChaCha8.
pub fn gaussian_init(n: usize, std: f64, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
    };
    (0..n).map(|_| [std * normal(), std * normal()]).collect()
}

pub fn tsne(x: &Matrix, params: &TsneParams) -> Result<TsneResult> {
    params.validate(x.rows())?;
    let init = gaussian_init(x.rows(), params.init_std, params.seed);
    tsne_from(x, params, init)
}

/// Runs t-SNE from a given starting layout.
pub fn tsne_from(x: &Matrix, params: &TsneParams, mut y: Vec<[f64; 2]>) -> Result<TsneResult> {
    let n = x.rows();
    params.validate(n)?;
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    let p = pairwise_affinities(x, params.perplexity)?;
    let mut velocity = vec![[0.0f64; 2]; n];
    let mut grad = vec![[0.0f64; 2]; n];
    let mut kl_trace = Vec::new();
    let log_at = |t: usize| t == params.exaggeration_iters || t % 50 == 0 || t == params.n_iter;

    for iter in 0..params.n_iter {
        let exaggeration = if iter < params.exaggeration_iters {
            params.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < params.momentum_switch_iter {
            params.momentum
        } else {
            params.final_momentum
        };

        let (num, z) = student_t(&y);
        for (i, g) in grad.iter_mut().enumerate() {
            let mut gx = 0.0;
            let mut gy = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let nij = num[i * n + j];
                let q = (nij / z).max(Q_FLOOR);
                let f = (exaggeration * p[i * n + j] - q) * nij;
                gx += f * (y[i][0] - y[j][0]);
                gy += f * (y[i][1] - y[j][1]);
            }
            *g = [4.0 * gx, 4.0 * gy];
        }

        let mut mean = [0.0; 2];
        for ((yi, vi), gi) in y.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
            for k in 0..2 {
                vi[k] = momentum * vi[k] - params.learning_rate * gi[k];
                yi[k] += vi[k];
                mean[k] += yi[k];
            }
        }
        if !(mean[0].is_finite() && mean[1].is_finite()) {
            return Err(Error::Diverged(iter));
        }
        for yi in y.iter_mut() {
            yi[0] -= mean[0] / n as f64;
            yi[1] -= mean[1] / n as f64;
        }

        let done = iter + 1;
        if log_at(done) {
            let kl = kl_divergence(&p, &y);
            if !kl.is_finite() {
                return Err(Error::Diverged(iter));
            }
            kl_trace.push((done, kl));
        }
    }

    let kl_final = kl_trace.last().map(|&(_, kl)| kl).unwrap_or(f64::NAN);
    let kl_start = kl_trace
        .iter()
        .find(|&&(t, _)| t >= params.exaggeration_iters)
        .map(|&(_, kl)| kl)
        .unwrap_or(kl_final);
    Ok(TsneResult {
        coords: y,
        kl_trace,
        kl_start,
        kl_final,
    })
}

/// One output row of an embedding export.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRow {
    pub image_id: String,
    pub x: f64,
    pub y: f64,
    /// `None` when predictions were supplied but not for this image.
    pub predicted_extent: Option<f64>,
    pub survival: Survival,
}

/// Joins coordinates with survival and, optionally, predicted extent.
pub fn join_embedding<S: AsRef<str>>(
    table: &FeatureTable,
    ids: &[S],
    coords: &[[f64; 2]],
    predictions: Option<&BTreeMap<String, f64>>,
) -> Result<Vec<EmbeddingRow>> {
    if ids.len() != coords.len() {
        return Err(Error::DimensionMismatch {
            expected: ids.len(),
            actual: coords.len(),
        });
    }
    ids.iter()
        .zip(coords)
        .map(|(id, c)| {
            let id = id.as_ref();
            let row = table.get(id).ok_or_else(|| Error::UnknownImage(id.to_string()))?;
            Ok(EmbeddingRow {
                image_id: id.to_string(),
                x: c[0],
                y: c[1],
                predicted_extent: predictions.and_then(|p| p.get(id).copied()),
                survival: row.record.survival,
            })
        })
        .collect()
}
