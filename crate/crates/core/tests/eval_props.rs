use cxrsev_core::data::{FeatureRow, FeatureTable, FeatureVector, GroundTruth, ImageRecord, Sex, Survival, Target};
use cxrsev_core::eval::{run_repeated_eval, run_repetition, EvalConfig};
use cxrsev_core::regress::FeatureSet;
use cxrsev_core::task::{Task, N_TASKS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Patients with one to three images; every output random, truth loosely
/// tied to lung opacity.
fn cohort(seed: u64, n_patients: usize) -> (FeatureTable, Vec<GroundTruth>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for p in 0..n_patients {
        for t in 0..rng.random_range(1..=3u32) {
            let mut outputs = [0.0; N_TASKS];
            for o in outputs.iter_mut() {
                *o = rng.random_range(-2.0..2.0);
            }
            let id = format!("p{p}_{t}");
            let extent = (2.0 * outputs[Task::LungOpacity.index()] + 4.0 + rng.random_range(-1.5f64..1.5)).clamp(0.0, 8.0);
            truth.push(GroundTruth { image_id: id.clone(), extent, opacity: extent * 0.75, n_raters: 3 });
            rows.push(FeatureRow {
                record: ImageRecord { image_id: id, patient_id: format!("p{p}"), timepoint: t, sex: Sex::Unknown, age: None, survival: Survival::Unknown },
                features: FeatureVector { outputs, intermediate: None },
            });
        }
    }
    (FeatureTable::new(rows).unwrap(), truth)
}

#[test]
fn single_feature_test_r2_bounded_by_squared_pearson() {
    for seed in 0..20 {
        let (t, truth) = cohort(seed, 40);
        for r in 0..10 {
            let rep = run_repetition(&t, &truth, FeatureSet::Opacity1, Target::Extent, 0.5, seed, r).unwrap();
            assert!(rep.r2 <= rep.pearson * rep.pearson + 1e-9, "seed {seed} rep {r}");
            assert!(rep.mae <= rep.mse.sqrt() + 1e-12);
        }
    }
}

#[test]
fn repetitions_reproducible_in_any_order() {
    let (t, truth) = cohort(1, 30);
    let run = run_repeated_eval(&t, &truth, FeatureSet::Pneumonia4, Target::Opacity, EvalConfig { n_reps: 8, ratio: 0.5, seed: 99 }).unwrap();
    for r in (0..8).rev() {
        let single = run_repetition(&t, &truth, FeatureSet::Pneumonia4, Target::Opacity, 0.5, 99, r).unwrap();
        assert_eq!(single, run.repetitions[r as usize]);
    }
}

#[test]
fn fewer_features_generalise_better_on_small_cohorts() {
    let (t, truth) = cohort(7, 45);
    let cfg = EvalConfig::new(3);
    let one = run_repeated_eval(&t, &truth, FeatureSet::Opacity1, Target::Extent, cfg).unwrap();
    let all = run_repeated_eval(&t, &truth, FeatureSet::All18, Target::Extent, cfg).unwrap();
    let none = run_repeated_eval(&t, &truth, FeatureSet::None, Target::Extent, cfg).unwrap();
    assert!(one.summary.mae.mean < all.summary.mae.mean);
    assert!(one.summary.mae.mean < none.summary.mae.mean);
    assert_eq!(none.summary.pearson.mean, 0.0);
}
