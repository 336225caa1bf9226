//! Held-out regression metrics.

use crate::error::{Error, Result};

fn check_pair(a: &[f64], b: &[f64], min_len: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty);
    }
    if a.len() < min_len {
        return Err(Error::TooFew {
            needed: min_len,
            actual: a.len(),
        });
    }
    Ok(())
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample Pearson correlation.
///
/// Returns `0.0` when either side has zero variance, so an intercept-only
/// probe scores 0 rather than NaN.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 2)?;
    if is_constant(a) || is_constant(b) {
        return Ok(0.0);
    }
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(0.0);
    }
    Ok((sab / libm::sqrt(saa * sbb)).clamp(-1.0, 1.0))
}

/// Coefficient of determination against the mean of `y` itself. Negative
/// when the predictions do worse than that mean.
pub fn r2(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat, 2)?;
    if is_constant(y) {
        return Err(Error::ConstantTruth);
    }
    let my = mean(y);
    let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat, 1)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| libm::fabs(a - b)).sum::<f64>() / y.len() as f64)
}

pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat, 1)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

/// Mean and sample (n − 1) standard deviation. The deviation is `None` for
/// fewer than two values.
pub fn mean_std(values: &[f64]) -> (f64, Option<f64>) {
    if values.is_empty() {
        return (f64::NAN, None);
    }
    let m = mean(values);
    if values.len() < 2 {
        return (m, None);
    }
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    (m, Some(libm::sqrt(var)))
}
