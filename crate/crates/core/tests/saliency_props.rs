use std::collections::BTreeMap;

use cxrsev_core::data::Target;
use cxrsev_core::regress::{FeatureSet, RegressionModel};
use cxrsev_core::saliency::{compose_saliency, gaussian_blur_5x5, render_gray, GradientRaster, SaliencyMap};
use cxrsev_core::Task;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// σ = 1 Gaussian at integer offsets, normalised, computed independently of
/// the crate's kernel builder.
fn reference_kernel() -> [[f64; 5]; 5] {
    let mut k = [[0.0; 5]; 5];
    let mut s = 0.0;
    for dy in -2i32..=2 {
        for dx in -2i32..=2 {
            let v = (-((dx * dx + dy * dy) as f64) / 2.0).exp();
            k[(dy + 2) as usize][(dx + 2) as usize] = v;
            s += v;
        }
    }
    for row in &mut k {
        for v in row {
            *v /= s;
        }
    }
    k
}

fn random_map(rng: &mut ChaCha8Rng, w: usize, h: usize) -> SaliencyMap {
    SaliencyMap::new("m", w, h, (0..w * h).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn impulse_response_is_the_kernel() {
    let mut values = vec![0.0; 81];
    values[4 * 9 + 4] = 1.0;
    let out = gaussian_blur_5x5(&SaliencyMap::new("i", 9, 9, values).unwrap(), 1.0).unwrap();
    let k = reference_kernel();
    for dy in 0..5 {
        for dx in 0..5 {
            assert!((out.get(2 + dx, 2 + dy) - k[dy][dx]).abs() < 1e-12);
        }
    }
    // Nothing leaks beyond the 5×5 neighbourhood.
    assert_eq!(out.get(0, 0), 0.0);
    assert_eq!(out.get(8, 4), 0.0);
}

#[test]
fn blur_is_additive() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_map(&mut rng, 12, 9);
    let b = random_map(&mut rng, 12, 9);
    let sum = SaliencyMap::new("s", 12, 9, a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect()).unwrap();
    let lhs = gaussian_blur_5x5(&sum, 1.0).unwrap();
    let ba = gaussian_blur_5x5(&a, 1.0).unwrap();
    let bb = gaussian_blur_5x5(&b, 1.0).unwrap();
    for i in 0..lhs.values.len() {
        assert!((lhs.values[i] - ba.values[i] - bb.values[i]).abs() < 1e-12);
    }
}

#[test]
fn compose_then_blur_equals_blur_then_compose() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (w, h) = (16, 11);
    let grads: BTreeMap<Task, GradientRaster> = Task::PNEUMONIA
        .iter()
        .map(|&t| {
            let values = (0..w * h).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            (t, GradientRaster { image_id: "g".into(), task: t, width: w, height: h, values })
        })
        .collect();
    let weights = vec![1.7, -0.4, 0.25, 2.0];
    let model = RegressionModel { feature_set: FeatureSet::Pneumonia4, target: Target::Extent, weights: weights.clone(), intercept: -1.0 };

    let lhs = gaussian_blur_5x5(&compose_saliency(&model, &grads).unwrap(), 1.0).unwrap();

    let mut rhs = vec![0.0; w * h];
    for (t, wt) in Task::PNEUMONIA.iter().zip(&weights) {
        let g = &grads[t];
        let m = SaliencyMap::new("g", w, h, g.values.iter().map(|&v| v as f64).collect()).unwrap();
        for (r, v) in rhs.iter_mut().zip(gaussian_blur_5x5(&m, 1.0).unwrap().values) {
            *r += wt * v;
        }
    }
    for (a, b) in lhs.values.iter().zip(&rhs) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn blur_roughly_preserves_mean_of_noisy_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (w, h) = (40, 40);
    let m = SaliencyMap::new("n", w, h, (0..w * h).map(|_| 10.0 + rng.random_range(-0.01..0.01)).collect()).unwrap();
    let b = gaussian_blur_5x5(&m, 1.0).unwrap();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(((mean(&b.values) - mean(&m.values)) / mean(&m.values)).abs() < 1e-6);
}

proptest! {
    #[test]
    fn rendering_is_monotone(values in prop::collection::vec(-1e3f64..1e3, 2..64)) {
        let n = values.len();
        let map = SaliencyMap::new("p", n, 1, values.clone()).unwrap();
        let img = render_gray(&map).unwrap();
        for i in 0..n {
            for j in 0..n {
                if values[i] < values[j] {
                    prop_assert!(img.pixels[i] <= img.pixels[j]);
                }
            }
        }
        if !img.degenerate {
            prop_assert_eq!(*img.pixels.iter().min().unwrap(), 0);
            prop_assert_eq!(*img.pixels.iter().max().unwrap(), 255);
        }
    }
}
