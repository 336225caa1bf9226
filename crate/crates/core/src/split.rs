//! Patient-grouped train/test splits.
//!
//! Repetition `r` of a run seeded with `seed` draws from ChaCha8 seeded with
//! `seed` on stream `r`, so any repetition can be regenerated on its own.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// The random stream used for one repetition.
pub fn repetition_rng(seed: u64, repetition: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(repetition);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub seed: u64,
    pub repetition: u64,
    pub train_patients: BTreeSet<String>,
    pub test_patients: BTreeSet<String>,
    /// Image ids in input order.
    pub train_images: Vec<String>,
    pub test_images: Vec<String>,
}

/// Splits images into train and test so that no patient straddles the two.
///
/// `images` yields `(image_id, patient_id)`. Patients are shuffled and added
/// to the train side until its image count first reaches `ratio · total`;
/// everyone else is test. If that would leave the test side empty, the train
/// side is instead the last patient drawn alone.
pub fn grouped_split<'a, I>(images: I, ratio: f64, seed: u64, repetition: u64) -> Result<SplitPlan>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidRatio(ratio));
    }
    let images: Vec<(&str, &str)> = images.into_iter().collect();
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for &(_, patient) in &images {
        *sizes.entry(patient).or_default() += 1;
    }
    if sizes.len() < 2 {
        return Err(Error::TooFewPatients(sizes.len()));
    }

    let mut order: Vec<&str> = sizes.keys().copied().collect();
    order.shuffle(&mut repetition_rng(seed, repetition));

    let target = ratio * images.len() as f64;
    let mut train = BTreeSet::new();
    let mut count = 0usize;
    for &p in &order {
        train.insert(p);
        count += sizes[p];
        if count as f64 >= target {
            break;
        }
    }
    if train.len() == order.len() {
        train.clear();
        train.insert(order[order.len() - 1]);
    }

    let mut plan = SplitPlan {
        seed,
        repetition,
        train_patients: BTreeSet::new(),
        test_patients: BTreeSet::new(),
        train_images: Vec::new(),
        test_images: Vec::new(),
    };
    for &p in &order {
        if train.contains(p) {
            plan.train_patients.insert(p.to_string());
        } else {
            plan.test_patients.insert(p.to_string());
        }
    }
    for (image, patient) in images {
        if train.contains(patient) {
            plan.train_images.push(image.to_string());
        } else {
            plan.test_images.push(image.to_string());
        }
    }
    Ok(plan)
}
