//! Saliency maps for linear probes.
//!
//! The probe is linear in the network outputs, so its input gradient is the
//! weighted sum of the per-output input gradients. The composed map is then
//! smoothed with a 5×5 Gaussian and min-max scaled to 8-bit gray.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::regress::{FeatureSet, RegressionModel};
use crate::task::Task;

pub const DEFAULT_SIGMA: f64 = 1.0;

/// Gradient of one pre-sigmoid output with respect to each input pixel,
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientRaster {
    pub image_id: String,
    pub task: Task,
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub image_id: String,
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(image_id: impl Into<String>, width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: values.len(),
            });
        }
        Ok(SaliencyMap {
            image_id: image_id.into(),
            width,
            height,
            values,
        })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn abs(mut self) -> Self {
        self.values.iter_mut().for_each(|v| *v = libm::fabs(*v));
        self
    }
}

/// Pixel-wise `Σ_k w_k · grad_k` over the probe's outputs. The intercept does
/// not depend on the input and contributes nothing.
pub fn compose_saliency(model: &RegressionModel, grads: &BTreeMap<Task, GradientRaster>) -> Result<SaliencyMap> {
    if model.feature_set == FeatureSet::Intermediate1024 {
        return Err(Error::InvalidParameter(
            "saliency composition needs a probe on task outputs",
        ));
    }
    let tasks = model.feature_set.tasks();
    if model.weights.len() != tasks.len() {
        return Err(Error::DimensionMismatch {
            expected: tasks.len(),
            actual: model.weights.len(),
        });
    }
    let reference = match tasks.first() {
        Some(t) => grads.get(t).ok_or(Error::MissingRaster(t.name()))?,
        None => grads.values().next().ok_or(Error::Empty)?,
    };
    let (w, h) = (reference.width, reference.height);
    let mut values = vec![0.0; w * h];
    for (&task, &weight) in tasks.iter().zip(&model.weights) {
        let g = grads.get(&task).ok_or(Error::MissingRaster(task.name()))?;
        if (g.width, g.height) != (w, h) || g.values.len() != w * h {
            return Err(Error::ShapeMismatch {
                expected_w: w,
                expected_h: h,
                actual_w: g.width,
                actual_h: g.height,
            });
        }
        for (v, &gv) in values.iter_mut().zip(&g.values) {
            *v += weight * gv as f64;
        }
    }
    SaliencyMap::new(reference.image_id.clone(), w, h, values)
}

/// Normalised 5×5 kernel sampled from the isotropic Gaussian at integer
/// offsets −2..=2, indexed `[dy + 2][dx + 2]`.
pub fn gaussian_kernel_5x5(sigma: f64) -> Result<[[f64; 5]; 5]> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter("blur sigma must be positive"));
    }
    let mut k = [[0.0; 5]; 5];
    let mut total = 0.0;
    for (dy, row) in k.iter_mut().enumerate() {
        for (dx, v) in row.iter_mut().enumerate() {
            let (x, y) = (dx as f64 - 2.0, dy as f64 - 2.0);
            *v = libm::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
            total += *v;
        }
    }
    k.iter_mut().flatten().for_each(|v| *v /= total);
    Ok(k)
}

/// 5×5 Gaussian smoothing with replicate-edge padding.
pub fn gaussian_blur_5x5(map: &SaliencyMap, sigma: f64) -> Result<SaliencyMap> {
    let (w, h) = (map.width, map.height);
    if w < 5 || h < 5 {
        return Err(Error::RasterTooSmall { width: w, height: h });
    }
    let kernel = gaussian_kernel_5x5(sigma)?;
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ky, krow) in kernel.iter().enumerate() {
                let sy = clamp(y as isize + ky as isize - 2, h);
                for (kx, &kv) in krow.iter().enumerate() {
                    let sx = clamp(x as isize + kx as isize - 2, w);
                    acc += kv * map.values[sy * w + sx];
                }
            }
            out[y * w + x] = acc;
        }
    }
    SaliencyMap::new(map.image_id.clone(), w, h, out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    /// Set when the map was constant and rendered as uniform mid-gray.
    pub degenerate: bool,
}

/// Min-max scales the map onto 0..=255.
pub fn render_gray(map: &SaliencyMap) -> Result<GrayImage> {
    if map.values.is_empty() {
        return Err(Error::Empty);
    }
    if map.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            image: map.image_id.clone(),
            field: String::from("saliency"),
        });
    }
    let lo = map.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = map.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let degenerate = hi <= lo;
    let pixels = if degenerate {
        vec![128; map.values.len()]
    } else {
        let scale = 255.0 / (hi - lo);
        map.values
            .iter()
            .map(|v| libm::round((v - lo) * scale).clamp(0.0, 255.0) as u8)
            .collect()
    };
    Ok(GrayImage {
        width: map.width,
        height: map.height,
        pixels,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Target;

    fn raster(task: Task, w: usize, h: usize, f: impl Fn(usize) -> f32) -> GradientRaster {
        GradientRaster {
            image_id: "img".into(),
            task,
            width: w,
            height: h,
            values: (0..w * h).map(f).collect(),
        }
    }

    fn model(set: FeatureSet, weights: Vec<f64>) -> RegressionModel {
        RegressionModel {
            feature_set: set,
            target: Target::Extent,
            weights,
            intercept: 3.0,
        }
    }

    #[test]
    fn unit_weight_is_identity() {
        let g = raster(Task::LungOpacity, 6, 5, |i| i as f32 * 0.5 - 3.0);
        let grads = BTreeMap::from([(Task::LungOpacity, g.clone())]);
        let s = compose_saliency(&model(FeatureSet::Opacity1, vec![1.0]), &grads).unwrap();
        let want: Vec<f64> = g.values.iter().map(|&v| v as f64).collect();
        assert_eq!(s.values, want);
    }

    #[test]
    fn equal_weights_average() {
        let grads: BTreeMap<_, _> = Task::PNEUMONIA
            .iter()
            .enumerate()
            .map(|(k, &t)| (t, raster(t, 5, 5, move |i| (i * (k + 1)) as f32)))
            .collect();
        let s = compose_saliency(&model(FeatureSet::Pneumonia4, vec![0.5, 0.5, 0.0, 0.0]), &grads).unwrap();
        for i in 0..25 {
            assert_eq!(s.values[i], 0.5 * i as f64 + 0.5 * (2 * i) as f64);
        }
        let zero = compose_saliency(&model(FeatureSet::Pneumonia4, vec![0.0; 4]), &grads).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn compose_errors() {
        let grads = BTreeMap::from([(Task::LungOpacity, raster(Task::LungOpacity, 5, 5, |_| 1.0))]);
        assert_eq!(
            compose_saliency(&model(FeatureSet::Pneumonia4, vec![1.0; 4]), &grads).unwrap_err(),
            Error::MissingRaster("pneumonia")
        );
        let mut grads: BTreeMap<_, _> = Task::PNEUMONIA.iter().map(|&t| (t, raster(t, 5, 5, |_| 1.0))).collect();
        grads.insert(Task::Pneumonia, raster(Task::Pneumonia, 6, 5, |_| 1.0));
        assert!(matches!(
            compose_saliency(&model(FeatureSet::Pneumonia4, vec![1.0; 4]), &grads).unwrap_err(),
            Error::ShapeMismatch { .. }
        ));
    }

    #[test]
    fn kernel_sums_to_one() {
        let k = gaussian_kernel_5x5(1.0).unwrap();
        let total: f64 = k.iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(k[0][1], k[1][0]);
        assert!(gaussian_kernel_5x5(0.0).is_err());
    }

    #[test]
    fn constant_survives_blur() {
        let m = SaliencyMap::new("c", 7, 6, vec![2.5; 42]).unwrap();
        let b = gaussian_blur_5x5(&m, 1.0).unwrap();
        assert!(b.values.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn undersized_blur_rejected() {
        let m = SaliencyMap::new("c", 4, 9, vec![0.0; 36]).unwrap();
        assert_eq!(
            gaussian_blur_5x5(&m, 1.0).unwrap_err(),
            Error::RasterTooSmall { width: 4, height: 9 }
        );
    }

    #[test]
    fn render_spans_full_range() {
        let m = SaliencyMap::new("r", 2, 2, vec![0.0, 1.0, 0.5, 0.25]).unwrap();
        let g = render_gray(&m).unwrap();
        assert_eq!(g.pixels, vec![0, 255, 128, 64]);
        assert!(!g.degenerate);

        let flat = render_gray(&SaliencyMap::new("r", 2, 2, vec![-3.0; 4]).unwrap()).unwrap();
        assert_eq!(flat.pixels, vec![128; 4]);
        assert!(flat.degenerate);
    }
}
