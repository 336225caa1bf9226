//! Dense row-major matrices and a one-sided Jacobi SVD, enough to solve small
//! least-squares problems in the minimum-norm sense.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Relative singular-value cutoff used by [`lstsq_min_norm`].
pub const RCOND: f64 = 1e-10;

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows. `cols` is needed so that a
    /// matrix with zero rows still knows its width.
    pub fn from_rows(cols: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// Per-column means. Empty matrix gives zeros.
    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.cols];
        if self.rows == 0 {
            return means;
        }
        for i in 0..self.rows {
            for (m, x) in means.iter_mut().zip(self.row(i)) {
                *m += x;
            }
        }
        let n = self.rows as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Thin singular value decomposition `A = U · diag(s) · Vᵀ`.
///
/// `u` holds the left singular vectors as columns (length `rows`), `v` the
/// right ones (length `cols`). Singular values are unsorted and may include
/// zeros.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Vec<Vec<f64>>,
    pub s: Vec<f64>,
    pub v: Vec<Vec<f64>>,
}

impl Svd {
    pub fn new(a: &Matrix) -> Svd {
        if a.rows >= a.cols {
            let cols: Vec<Vec<f64>> = (0..a.cols).map(|j| a.column(j)).collect();
            let (u, s, v) = one_sided_jacobi(cols, a.rows);
            Svd { u, s, v }
        } else {
            // Orthogonalise the shorter dimension: Aᵀ = U' S V'ᵀ, so A = V' S U'ᵀ.
            let cols: Vec<Vec<f64>> = (0..a.rows).map(|i| a.row(i).to_vec()).collect();
            let (u, s, v) = one_sided_jacobi(cols, a.cols);
            Svd { u: v, s, v: u }
        }
    }

    pub fn max_singular_value(&self) -> f64 {
        self.s.iter().copied().fold(0.0, f64::max)
    }
}

/// Hestenes one-sided Jacobi on the given columns (each of length `len`).
/// Returns (normalised columns, column norms, accumulated rotations).
#[allow(clippy::type_complexity)]
fn one_sided_jacobi(
    mut cols: Vec<Vec<f64>>,
    len: usize,
) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
    let k = cols.len();
    let mut v: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..k {
            for j in (i + 1)..k {
                let alpha = dot(&cols[i], &cols[i]);
                let beta = dot(&cols[j], &cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if gamma == 0.0 || libm::fabs(gamma) <= f64::EPSILON * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(&mut cols, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma = Vec::with_capacity(k);
    for col in cols.iter_mut() {
        let norm = libm::sqrt(dot(col, col));
        sigma.push(norm);
        if norm > 0.0 {
            col.iter_mut().for_each(|x| *x /= norm);
        } else {
            col.clear();
            col.resize(len, 0.0);
        }
    }
    (cols, sigma, v)
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    for (a, b) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Minimum-Euclidean-norm minimiser of `‖A·x − b‖₂`.
///
/// Singular values below `RCOND · σ_max` are treated as zero.
pub fn lstsq_min_norm(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            actual: b.len(),
        });
    }
    let mut x = vec![0.0; a.cols];
    if a.rows == 0 || a.cols == 0 {
        return Ok(x);
    }
    let svd = Svd::new(a);
    let cutoff = RCOND * svd.max_singular_value();
    for ((u, &s), v) in svd.u.iter().zip(&svd.s).zip(&svd.v) {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let coef = dot(u, b) / s;
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi += coef * vi;
        }
    }
    Ok(x)
}
