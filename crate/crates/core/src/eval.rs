//! Repeated patient-grouped evaluation of a linear probe.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::data::{FeatureTable, GroundTruth, Target};
use crate::error::{Error, Result};
use crate::metrics::{mae, mean_std, mse, pearson, r2};
use crate::regress::{design_matrix, FeatureSet, RegressionModel};
use crate::split::grouped_split;

pub const DEFAULT_REPS: usize = 50;
pub const DEFAULT_RATIO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub n_reps: usize,
    pub ratio: f64,
    pub seed: u64,
}

impl EvalConfig {
    pub fn new(seed: u64) -> Self {
        EvalConfig {
            n_reps: DEFAULT_REPS,
            ratio: DEFAULT_RATIO,
            seed,
        }
    }
}

/// Held-out metrics and predictions for one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct Repetition {
    pub index: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub pearson: f64,
    pub r2: f64,
    pub mae: f64,
    pub mse: f64,
    pub model: RegressionModel,
    pub test_ids: Vec<String>,
    pub test_truth: Vec<f64>,
    pub test_pred: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; absent with fewer than two repetitions.
    pub std: Option<f64>,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let (mean, std) = mean_std(values);
        Stat { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub target: Target,
    pub feature_set: FeatureSet,
    pub n_params: usize,
    pub n_reps: usize,
    pub pearson: Stat,
    pub r2: Stat,
    pub mae: Stat,
    pub mse: Stat,
}

impl MetricsSummary {
    pub fn from_repetitions(target: Target, feature_set: FeatureSet, reps: &[Repetition]) -> Self {
        let col = |f: fn(&Repetition) -> f64| Stat::of(&reps.iter().map(f).collect::<Vec<_>>());
        MetricsSummary {
            target,
            feature_set,
            n_params: feature_set.n_params(),
            n_reps: reps.len(),
            pearson: col(|r| r.pearson),
            r2: col(|r| r.r2),
            mae: col(|r| r.mae),
            mse: col(|r| r.mse),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRun {
    pub summary: MetricsSummary,
    pub repetitions: Vec<Repetition>,
}

/// Fits on the train side and scores on the test side of one split.
pub fn run_repetition(
    features: &FeatureTable,
    truth: &[GroundTruth],
    spec: FeatureSet,
    target: Target,
    ratio: f64,
    seed: u64,
    index: u64,
) -> Result<Repetition> {
    let mut units = Vec::with_capacity(truth.len());
    let mut values = BTreeMap::new();
    for gt in truth {
        let row = features
            .get(&gt.image_id)
            .ok_or_else(|| Error::UnknownImage(gt.image_id.clone()))?;
        units.push((gt.image_id.as_str(), row.record.patient_id.as_str()));
        values.insert(gt.image_id.as_str(), gt.value(target));
    }
    let plan = grouped_split(units, ratio, seed, index)?;
    let y_of = |ids: &[String]| ids.iter().map(|id| values[id.as_str()]).collect::<Vec<f64>>();

    let x_train = design_matrix(features, spec, &plan.train_images)?;
    let model = RegressionModel::fit(spec, target, &x_train, &y_of(&plan.train_images))?;
    let x_test = design_matrix(features, spec, &plan.test_images)?;
    let test_pred = model.predict(&x_test)?;
    let test_truth = y_of(&plan.test_images);

    Ok(Repetition {
        index,
        n_train: plan.train_images.len(),
        n_test: plan.test_images.len(),
        pearson: pearson(&test_pred, &test_truth)?,
        r2: r2(&test_truth, &test_pred)?,
        mae: mae(&test_truth, &test_pred)?,
        mse: mse(&test_truth, &test_pred)?,
        model,
        test_ids: plan.test_images,
        test_truth,
        test_pred,
    })
}

/// Runs `config.n_reps` independent repetitions and summarises them.
pub fn run_repeated_eval(
    features: &FeatureTable,
    truth: &[GroundTruth],
    spec: FeatureSet,
    target: Target,
    config: EvalConfig,
) -> Result<EvalRun> {
    if config.n_reps == 0 {
        return Err(Error::InvalidParameter("repetition count must be positive"));
    }
    let repetitions = (0..config.n_reps as u64)
        .map(|r| run_repetition(features, truth, spec, target, config.ratio, config.seed, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalRun {
        summary: MetricsSummary::from_repetitions(target, spec, &repetitions),
        repetitions,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub image_id: String,
    pub truth: f64,
    pub prediction: f64,
    pub abs_error: f64,
}

/// Joins predictions to ground truth for a truth-vs-prediction plot.
pub fn scatter_points(
    truth: &[GroundTruth],
    predictions: &[(String, f64)],
    target: Target,
) -> Result<Vec<ScatterPoint>> {
    if predictions.is_empty() {
        return Err(Error::Empty);
    }
    let by_id: BTreeMap<&str, &GroundTruth> =
        truth.iter().map(|g| (g.image_id.as_str(), g)).collect();
    predictions
        .iter()
        .map(|(id, pred)| {
            let gt = by_id
                .get(id.as_str())
                .ok_or_else(|| Error::UnknownImage(id.to_string()))?;
            let t = gt.value(target);
            Ok(ScatterPoint {
                image_id: id.clone(),
                truth: t,
                prediction: *pred,
                abs_error: libm::fabs(pred - t),
            })
        })
        .collect()
}

impl Repetition {
    pub fn predictions(&self) -> Vec<(String, f64)> {
        self.test_ids.iter().cloned().zip(self.test_pred.iter().copied()).collect()
    }
}
