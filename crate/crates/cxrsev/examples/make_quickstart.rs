//! Writes a synthetic cohort in the toolkit's input formats:
//! 208 images (94 rated by three raters), the 1024-wide intermediate block,
//! and 64×64 gradient rasters for two images.
//!
//! Usage: `cargo run -p cxrsev --example make_quickstart -- [OUT_DIR]`
//! (default `data/quickstart`).

use std::fs;
use std::path::PathBuf;

use cxrsev::features::write_features;
use cxrsev::labels::write_labels;
use cxrsev::xgrd::{raster_path, store_gradient_raster};
use cxrsev_core::data::{
    FeatureRow, FeatureTable, FeatureVector, ImageRecord, LabelTable, RaterScore, Sex, Survival, INTERMEDIATE_DIM,
};
use cxrsev_core::saliency::GradientRaster;
use cxrsev_core::task::{Task, N_TASKS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const N_IMAGES: usize = 208;
const N_LABELED: usize = 94;
const RASTER: usize = 64;

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/quickstart".into()));
    fs::create_dir_all(out.join("grads"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(94);
    let noise = |sd: f64| Normal::new(0.0, sd).unwrap();
    let projection: Vec<f64> = (0..INTERMEDIATE_DIM).map(|_| noise(0.35).sample(&mut rng)).collect();

    let mut rows = Vec::new();
    let mut severity = Vec::new();
    let mut patient = 0;
    while rows.len() < N_IMAGES {
        patient += 1;
        let n_images = rng.random_range(1..=4).min(N_IMAGES - rows.len());
        let sex = match rng.random_range(0..10) {
            0..=4 => Sex::Male,
            5..=8 => Sex::Female,
            _ => Sex::Unknown,
        };
        let age = (rng.random_range(0..8) > 0).then(|| (56.0 + noise(14.8).sample(&mut rng)).clamp(20.0, 95.0).round());
        let mut s: f64 = rng.random::<f64>().powf(0.8);
        let survival = match rng.random_range(0..5) {
            0 => Survival::Unknown,
            _ if s + noise(0.25).sample(&mut rng) > 0.75 => Survival::Deceased,
            _ => Survival::Survived,
        };
        for t in 0..n_images {
            let lungs = [
                (s + noise(0.12).sample(&mut rng)).clamp(0.0, 1.0),
                (s + noise(0.12).sample(&mut rng)).clamp(0.0, 1.0),
            ];
            let mean = 0.5 * (lungs[0] + lungs[1]);
            let mut outputs = [0.0; N_TASKS];
            for (k, o) in outputs.iter_mut().enumerate() {
                *o = -1.0 + noise(1.0).sample(&mut rng) + 0.02 * k as f64;
            }
            outputs[Task::LungOpacity.index()] = -2.5 + 5.0 * mean + noise(0.55).sample(&mut rng);
            outputs[Task::Pneumonia.index()] = -2.0 + 3.0 * mean + noise(0.7).sample(&mut rng);
            outputs[Task::Infiltration.index()] = -1.5 + 2.0 * mean + noise(0.8).sample(&mut rng);
            outputs[Task::Consolidation.index()] = -2.0 + 2.5 * mean + noise(0.8).sample(&mut rng);
            let intermediate = projection
                .iter()
                .map(|w| round3(w * (mean - 0.5) * 0.8 + noise(1.0).sample(&mut rng)))
                .collect();
            rows.push(FeatureRow {
                record: ImageRecord {
                    image_id: format!("img{:03}", rows.len() + 1),
                    patient_id: format!("pt{patient:03}"),
                    timepoint: t as u32,
                    sex,
                    age,
                    survival,
                },
                features: FeatureVector {
                    outputs: outputs.map(round3),
                    intermediate: Some(intermediate),
                },
            });
            severity.push(lungs);
            s = (s + noise(0.15).sample(&mut rng)).clamp(0.0, 1.0);
        }
    }

    let mut scores = Vec::new();
    for (row, lungs) in rows.iter().zip(&severity).take(N_LABELED) {
        for rater in ["R1", "R2", "R3"] {
            let mut extent = [0i64; 2];
            let mut opacity = [0i64; 2];
            for side in 0..2 {
                extent[side] = (4.0 * lungs[side] + noise(0.3).sample(&mut rng)).round().clamp(0.0, 4.0) as i64;
                opacity[side] = (3.0 * lungs[side].powf(0.8) + noise(0.45).sample(&mut rng)).round().clamp(0.0, 3.0) as i64;
            }
            scores.push(RaterScore::new(&row.record.image_id, rater, extent, opacity)?);
        }
    }

    let table = FeatureTable::new(rows)?;
    write_features(&table, fs::File::create(out.join("features.csv"))?)?;
    write_labels(&LabelTable::new(scores)?, fs::File::create(out.join("labels.csv"))?)?;

    // A bright, severity-scaled blob per lung with task-specific texture.
    for (id, lungs) in [("img002", severity[1]), ("img007", severity[6])] {
        for (k, &task) in Task::PNEUMONIA.iter().enumerate() {
            let mut values = Vec::with_capacity(RASTER * RASTER);
            for y in 0..RASTER {
                for x in 0..RASTER {
                    let (fx, fy) = (x as f64 / RASTER as f64, y as f64 / RASTER as f64);
                    let blob = |cx: f64, amp: f64| amp * (-((fx - cx).powi(2) + (fy - 0.55).powi(2)) / 0.02).exp();
                    let texture = 0.1 * ((fx * (7.0 + k as f64)).sin() * (fy * 5.0).cos());
                    values.push((blob(0.3, lungs[0]) + blob(0.7, lungs[1]) + texture + noise(0.05).sample(&mut rng)) as f32);
                }
            }
            let raster = GradientRaster {
                image_id: id.to_string(),
                task,
                width: RASTER,
                height: RASTER,
                values,
            };
            store_gradient_raster(&raster_path(&out.join("grads"), id, task), &raster)?;
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}
