//! Shared domain types: per-image features, rater scores and their aggregation
//! into regression targets, and cohort summaries.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::task::{Task, N_TASKS};

/// Width of the pooled convolutional trunk output.
pub const INTERMEDIATE_DIM: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Sex {
    Male,
    Female,
    #[default]
    Unknown,
}

impl Sex {
    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Male => "male",
            Sex::Female => "female",
            Sex::Unknown => "unknown",
        }
    }
}

impl FromStr for Sex {
    type Err = ();

    /// Accepts the canonical spelling plus `M`/`F`; empty means unknown.
    fn from_str(s: &str) -> core::result::Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Ok(Sex::Male),
            "female" | "f" => Ok(Sex::Female),
            "unknown" | "" => Ok(Sex::Unknown),
            _ => Err(()),
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Survival {
    Survived,
    Deceased,
    #[default]
    Unknown,
}

impl Survival {
    pub fn as_str(self) -> &'static str {
        match self {
            Survival::Survived => "survived",
            Survival::Deceased => "deceased",
            Survival::Unknown => "unknown",
        }
    }
}

impl FromStr for Survival {
    type Err = ();

    /// Accepts the canonical spelling plus the `Y`/`N` coding used by the
    /// public image collection; empty means unknown.
    fn from_str(s: &str) -> core::result::Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "survived" | "y" | "yes" => Ok(Survival::Survived),
            "deceased" | "n" | "no" => Ok(Survival::Deceased),
            "unknown" | "" => Ok(Survival::Unknown),
            _ => Err(()),
        }
    }
}

impl fmt::Display for Survival {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub image_id: String,
    pub patient_id: String,
    /// Offset within the patient's series.
    pub timepoint: u32,
    pub sex: Sex,
    pub age: Option<f64>,
    pub survival: Survival,
}

/// Pre-sigmoid outputs of the 18 task heads, optionally with the 1024-wide
/// intermediate vector that feeds them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub outputs: [f64; N_TASKS],
    pub intermediate: Option<Vec<f64>>,
}

impl FeatureVector {
    pub fn output(&self, task: Task) -> f64 {
        self.outputs[task.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub record: ImageRecord,
    pub features: FeatureVector,
}

/// Validated per-image metadata and features, in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    rows: Vec<FeatureRow>,
    index: BTreeMap<String, usize>,
}

impl FeatureTable {
    pub fn new(rows: Vec<FeatureRow>) -> Result<Self> {
        let mut index = BTreeMap::new();
        let mut series = BTreeSet::new();
        for (i, row) in rows.iter().enumerate() {
            let rec = &row.record;
            if index.insert(rec.image_id.clone(), i).is_some() {
                return Err(Error::DuplicateImage(rec.image_id.clone()));
            }
            if !series.insert((rec.patient_id.as_str(), rec.timepoint)) {
                return Err(Error::DuplicateTimepoint {
                    patient: rec.patient_id.clone(),
                    timepoint: rec.timepoint,
                });
            }
            if let Some(age) = rec.age {
                if !age.is_finite() {
                    return Err(Error::NonFinite {
                        image: rec.image_id.clone(),
                        field: "age".to_string(),
                    });
                }
            }
            for task in Task::ALL {
                if !row.features.output(task).is_finite() {
                    return Err(Error::NonFinite {
                        image: rec.image_id.clone(),
                        field: alloc::format!("out_{}", task.name()),
                    });
                }
            }
            if let Some(v) = &row.features.intermediate {
                if v.len() != INTERMEDIATE_DIM {
                    return Err(Error::IntermediateLength(v.len()));
                }
                if let Some(k) = v.iter().position(|x| !x.is_finite()) {
                    return Err(Error::NonFinite {
                        image: rec.image_id.clone(),
                        field: alloc::format!("feat_{k:04}"),
                    });
                }
            }
        }
        Ok(FeatureTable { rows, index })
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&FeatureRow> {
        self.index.get(image_id).map(|&i| &self.rows[i])
    }

    /// True when every row carries the intermediate block (and there is at
    /// least one row).
    pub fn has_intermediate(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.features.intermediate.is_some())
    }
}

/// The two severity scales. Also the regression target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Opacity,
    Extent,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::Opacity, Target::Extent];

    /// Largest total score over both lungs.
    pub fn max_total(self) -> u8 {
        match self {
            Target::Extent => 8,
            Target::Opacity => 6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Target::Extent => "extent",
            Target::Opacity => "opacity",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Target::Extent => "Geographic Extent",
            Target::Opacity => "Opacity Score",
        }
    }
}

impl FromStr for Target {
    type Err = ();

    fn from_str(s: &str) -> core::result::Result<Self, ()> {
        match s {
            "extent" => Ok(Target::Extent),
            "opacity" => Ok(Target::Opacity),
            _ => Err(()),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One rater's per-lung scores for one image. Extent is 0–4 per lung and
/// opacity 0–3 per lung.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaterScore {
    pub image_id: String,
    pub rater_id: String,
    pub extent_right: u8,
    pub extent_left: u8,
    pub opacity_right: u8,
    pub opacity_left: u8,
}

impl RaterScore {
    /// Builds a score after checking each field against its scale.
    pub fn new(
        image_id: impl Into<String>,
        rater_id: impl Into<String>,
        extent: [i64; 2],
        opacity: [i64; 2],
    ) -> Result<Self> {
        let check = |field, value: i64, max: u8| {
            if (0..=max as i64).contains(&value) {
                Ok(value as u8)
            } else {
                Err(Error::ScoreOutOfRange {
                    field,
                    value,
                    min: 0,
                    max,
                })
            }
        };
        Ok(RaterScore {
            image_id: image_id.into(),
            rater_id: rater_id.into(),
            extent_right: check("extent_right", extent[0], 4)?,
            extent_left: check("extent_left", extent[1], 4)?,
            opacity_right: check("opacity_right", opacity[0], 3)?,
            opacity_left: check("opacity_left", opacity[1], 3)?,
        })
    }

    pub fn extent_total(&self) -> u8 {
        self.extent_right + self.extent_left
    }

    pub fn opacity_total(&self) -> u8 {
        self.opacity_right + self.opacity_left
    }

    pub fn total(&self, target: Target) -> u8 {
        match target {
            Target::Extent => self.extent_total(),
            Target::Opacity => self.opacity_total(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelTable {
    scores: Vec<RaterScore>,
}

impl LabelTable {
    /// Rejects a second row for the same (image, rater) pair. Field ranges are
    /// already guaranteed by [`RaterScore::new`].
    pub fn new(scores: Vec<RaterScore>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for s in &scores {
            if !seen.insert((s.image_id.as_str(), s.rater_id.as_str())) {
                return Err(Error::DuplicateRating {
                    image: s.image_id.clone(),
                    rater: s.rater_id.clone(),
                });
            }
            for (field, v, max) in [
                ("extent_right", s.extent_right, 4),
                ("extent_left", s.extent_left, 4),
                ("opacity_right", s.opacity_right, 3),
                ("opacity_left", s.opacity_left, 3),
            ] {
                if v > max {
                    return Err(Error::ScoreOutOfRange {
                        field,
                        value: v as i64,
                        min: 0,
                        max,
                    });
                }
            }
        }
        Ok(LabelTable { scores })
    }

    pub fn scores(&self) -> &[RaterScore] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Rows grouped by image, images in order of first appearance.
    pub fn by_image(&self) -> Vec<(&str, Vec<&RaterScore>)> {
        let mut order: Vec<(&str, Vec<&RaterScore>)> = Vec::new();
        let mut slot: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &self.scores {
            let i = *slot.entry(s.image_id.as_str()).or_insert_with(|| {
                order.push((s.image_id.as_str(), Vec::new()));
                order.len() - 1
            });
            order[i].1.push(s);
        }
        order
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Mean,
    Median,
}

impl FromStr for Aggregation {
    type Err = ();

    fn from_str(s: &str) -> core::result::Result<Self, ()> {
        match s {
            "mean" => Ok(Aggregation::Mean),
            "median" => Ok(Aggregation::Median),
            _ => Err(()),
        }
    }
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Mean => "mean",
            Aggregation::Median => "median",
        }
    }

    fn apply(self, values: &mut [f64]) -> f64 {
        match self {
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregation::Median => {
                values.sort_by(f64::total_cmp);
                let n = values.len();
                if n % 2 == 1 {
                    values[n / 2]
                } else {
                    0.5 * (values[n / 2 - 1] + values[n / 2])
                }
            }
        }
    }
}

/// Consensus regression targets for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub image_id: String,
    pub extent: f64,
    pub opacity: f64,
    pub n_raters: usize,
}

impl GroundTruth {
    pub fn value(&self, target: Target) -> f64 {
        match target {
            Target::Extent => self.extent,
            Target::Opacity => self.opacity,
        }
    }
}

/// Collapses each image's rater totals into one target per scale.
pub fn aggregate_labels(labels: &LabelTable, policy: Aggregation) -> Result<Vec<GroundTruth>> {
    if labels.is_empty() {
        return Err(Error::EmptyLabels);
    }
    Ok(labels
        .by_image()
        .into_iter()
        .map(|(image_id, rows)| {
            let mut extent: Vec<f64> = rows.iter().map(|r| r.extent_total() as f64).collect();
            let mut opacity: Vec<f64> = rows.iter().map(|r| r.opacity_total() as f64).collect();
            GroundTruth {
                image_id: image_id.to_string(),
                extent: policy.apply(&mut extent),
                opacity: policy.apply(&mut opacity),
                n_raters: rows.len(),
            }
        })
        .collect())
}

/// Mean and population standard deviation of a set of ages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

impl AgeStats {
    fn from_ages(ages: &[f64]) -> Option<Self> {
        if ages.is_empty() {
            return None;
        }
        let n = ages.len() as f64;
        let mean = ages.iter().sum::<f64>() / n;
        let var = ages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
        Some(AgeStats {
            n: ages.len(),
            mean,
            std: libm::sqrt(var),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortSummary {
    pub n_images: usize,
    pub n_patients: usize,
    pub male: usize,
    pub female: usize,
    pub sex_unknown: usize,
    /// `None` when no image has an age.
    pub age: Option<AgeStats>,
    pub age_by_sex: BTreeMap<Sex, AgeStats>,
}

/// Image-level counts and age statistics. Missing ages are skipped; missing
/// sexes are counted as unknown.
pub fn cohort_summary(table: &FeatureTable) -> CohortSummary {
    let mut male = 0;
    let mut female = 0;
    let mut sex_unknown = 0;
    let mut patients = BTreeSet::new();
    let mut ages = Vec::new();
    let mut ages_by_sex: BTreeMap<Sex, Vec<f64>> = BTreeMap::new();
    for row in table.rows() {
        let rec = &row.record;
        patients.insert(rec.patient_id.as_str());
        match rec.sex {
            Sex::Male => male += 1,
            Sex::Female => female += 1,
            Sex::Unknown => sex_unknown += 1,
        }
        if let Some(age) = rec.age {
            ages.push(age);
            ages_by_sex.entry(rec.sex).or_default().push(age);
        }
    }
    CohortSummary {
        n_images: table.len(),
        n_patients: patients.len(),
        male,
        female,
        sex_unknown,
        age: AgeStats::from_ages(&ages),
        age_by_sex: ages_by_sex
            .into_iter()
            .filter_map(|(sex, a)| AgeStats::from_ages(&a).map(|s| (sex, s)))
            .collect(),
    }
}
