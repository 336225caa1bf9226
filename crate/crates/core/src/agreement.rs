//! Fleiss' kappa over total severity scores.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{LabelTable, Target};
use crate::error::{Error, Result};

/// Raters-per-category counts, one row per item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingMatrix {
    pub items: Vec<String>,
    /// Category values, e.g. `0..=8` for extent.
    pub categories: Vec<u8>,
    counts: Vec<Vec<u32>>,
    n_raters: u32,
}

impl RatingMatrix {
    /// Every row must sum to the same rater count, which must be at least 2.
    pub fn new(items: Vec<String>, categories: Vec<u8>, counts: Vec<Vec<u32>>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Empty);
        }
        if items.len() != counts.len() {
            return Err(Error::DimensionMismatch {
                expected: counts.len(),
                actual: items.len(),
            });
        }
        let n_raters: u32 = counts[0].iter().sum();
        for (item, row) in items.iter().zip(&counts) {
            if row.len() != categories.len() {
                return Err(Error::DimensionMismatch {
                    expected: categories.len(),
                    actual: row.len(),
                });
            }
            let n: u32 = row.iter().sum();
            if n != n_raters {
                return Err(Error::UnequalRaters {
                    image: item.clone(),
                    expected: n_raters as usize,
                    actual: n as usize,
                });
            }
        }
        if n_raters < 2 {
            return Err(Error::TooFew {
                needed: 2,
                actual: n_raters as usize,
            });
        }
        Ok(RatingMatrix {
            items,
            categories,
            counts,
            n_raters,
        })
    }

    pub fn counts(&self) -> &[Vec<u32>] {
        &self.counts
    }

    pub fn n_items(&self) -> usize {
        self.counts.len()
    }

    pub fn n_raters(&self) -> u32 {
        self.n_raters
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }
}

/// Tallies each image's rater totals on the full `0..=max` scale, including
/// categories nobody used.
pub fn ratings_from_labels(labels: &LabelTable, scale: Target) -> Result<RatingMatrix> {
    let categories: Vec<u8> = (0..=scale.max_total()).collect();
    let mut items = Vec::new();
    let mut counts = Vec::new();
    for (image, rows) in labels.by_image() {
        let mut row = vec![0u32; categories.len()];
        for r in rows {
            row[r.total(scale) as usize] += 1;
        }
        items.push(image.to_string());
        counts.push(row);
    }
    RatingMatrix::new(items, categories, counts)
}

/// Fleiss' kappa, treating categories as nominal.
///
/// Undefined (and reported as an error) when chance agreement is 1, i.e.
/// every rating in the matrix falls in the same category.
pub fn fleiss_kappa(m: &RatingMatrix) -> Result<f64> {
    let n = m.n_raters as f64;
    let items = m.n_items() as f64;
    let mut category_totals = vec![0.0; m.n_categories()];
    let mut observed = 0.0;
    for row in &m.counts {
        let mut sq = 0.0;
        for (total, &c) in category_totals.iter_mut().zip(row) {
            let c = c as f64;
            *total += c;
            sq += c * c;
        }
        observed += (sq - n) / (n * (n - 1.0));
    }
    let p_bar = observed / items;
    let p_e: f64 = category_totals
        .iter()
        .map(|t| {
            let p = t / (items * n);
            p * p
        })
        .sum();
    if 1.0 - p_e <= 1e-15 {
        return Err(Error::KappaUndefined);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}
