//! Linear probes on frozen network features.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::data::{FeatureTable, Target, INTERMEDIATE_DIM};
use crate::error::{Error, Result};
use crate::linalg::{lstsq_min_norm, Matrix};
use crate::task::Task;

/// Which network outputs a probe sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureSet {
    /// Intercept only.
    None,
    /// The single lung-opacity output.
    Opacity1,
    /// Lung opacity, pneumonia, infiltration, consolidation.
    Pneumonia4,
    All18,
    Intermediate1024,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 5] = [
        FeatureSet::Opacity1,
        FeatureSet::Pneumonia4,
        FeatureSet::All18,
        FeatureSet::Intermediate1024,
        FeatureSet::None,
    ];

    pub fn width(self) -> usize {
        match self {
            FeatureSet::None => 0,
            FeatureSet::Opacity1 => 1,
            FeatureSet::Pneumonia4 => 4,
            FeatureSet::All18 => 18,
            FeatureSet::Intermediate1024 => INTERMEDIATE_DIM,
        }
    }

    /// Fitted parameters including the intercept.
    pub fn n_params(self) -> usize {
        self.width() + 1
    }

    /// Output heads read by this set, in column order. Empty for the
    /// intermediate block, which is not a task output.
    pub fn tasks(self) -> &'static [Task] {
        match self {
            FeatureSet::None | FeatureSet::Intermediate1024 => &[],
            FeatureSet::Opacity1 => &[Task::LungOpacity],
            FeatureSet::Pneumonia4 => &Task::PNEUMONIA,
            FeatureSet::All18 => &Task::ALL,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::None => "none",
            FeatureSet::Opacity1 => "opacity1",
            FeatureSet::Pneumonia4 => "pneumonia4",
            FeatureSet::All18 => "all18",
            FeatureSet::Intermediate1024 => "intermediate1024",
        }
    }

    /// Human-readable row label for reports.
    pub fn label(self) -> &'static str {
        match self {
            FeatureSet::None => "No data",
            FeatureSet::Opacity1 => "\"lung opacity\" output",
            FeatureSet::Pneumonia4 => "4 outputs",
            FeatureSet::All18 => "18 outputs",
            FeatureSet::Intermediate1024 => "Intermediate network features",
        }
    }
}

impl FromStr for FeatureSet {
    type Err = ();

    fn from_str(s: &str) -> core::result::Result<Self, ()> {
        FeatureSet::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == s)
            .ok_or(())
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rows in `ids` order, columns in the feature set's canonical order. No
/// intercept column is included.
pub fn design_matrix<S: AsRef<str>>(
    table: &FeatureTable,
    spec: FeatureSet,
    ids: &[S],
) -> Result<Matrix> {
    let width = spec.width();
    let mut data = Vec::with_capacity(ids.len() * width);
    for id in ids {
        let id = id.as_ref();
        let row = table
            .get(id)
            .ok_or_else(|| Error::UnknownImage(id.to_string()))?;
        match spec {
            FeatureSet::Intermediate1024 => {
                let v = row
                    .features
                    .intermediate
                    .as_ref()
                    .ok_or_else(|| Error::MissingIntermediate(id.to_string()))?;
                data.extend_from_slice(v);
            }
            _ => data.extend(spec.tasks().iter().map(|&t| row.features.output(t))),
        }
    }
    Matrix::from_row_major(ids.len(), width, data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

/// Ordinary least squares with an unpenalised intercept.
///
/// Columns and target are centred, so the intercept absorbs the means and the
/// weights solve the centred problem. When the weights are not unique the
/// minimum-norm solution is returned.
pub fn fit_ols(x: &Matrix, y: &[f64]) -> Result<Coefficients> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::Empty);
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            image: alloc::format!("row {i}"),
            field: "target".to_string(),
        });
    }
    let means = x.column_means();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let mut centred = Matrix::zeros(n, x.cols());
    for i in 0..n {
        for (j, m) in means.iter().enumerate() {
            centred.set(i, j, x.get(i, j) - m);
        }
    }
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let weights = lstsq_min_norm(&centred, &yc)?;
    let intercept = y_mean - crate::linalg::dot(&means, &weights);
    Ok(Coefficients { weights, intercept })
}

/// A fitted probe for one target on one feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    pub feature_set: FeatureSet,
    pub target: Target,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl RegressionModel {
    pub fn fit(feature_set: FeatureSet, target: Target, x: &Matrix, y: &[f64]) -> Result<Self> {
        if x.cols() != feature_set.width() {
            return Err(Error::DimensionMismatch {
                expected: feature_set.width(),
                actual: x.cols(),
            });
        }
        let c = fit_ols(x, y)?;
        Ok(RegressionModel {
            feature_set,
            target,
            weights: c.weights,
            intercept: c.intercept,
        })
    }

    pub fn n_params(&self) -> usize {
        self.weights.len() + 1
    }

    /// `X·w + b`, unclipped: predictions may fall outside the score range.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(x
            .mul_vec(&self.weights)?
            .into_iter()
            .map(|v| v + self.intercept)
            .collect())
    }
}
