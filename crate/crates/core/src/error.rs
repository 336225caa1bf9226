use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("duplicate image_id `{0}`")]
    DuplicateImage(String),
    #[error("duplicate (patient_id, timepoint) = (`{patient}`, {timepoint})")]
    DuplicateTimepoint { patient: String, timepoint: u32 },
    #[error("duplicate rating for image `{image}` by rater `{rater}`")]
    DuplicateRating { image: String, rater: String },
    #[error("unknown image_id `{0}`")]
    UnknownImage(String),
    #[error("non-finite value in `{field}` of image `{image}`")]
    NonFinite { image: String, field: String },
    #[error("{field} = {value} is outside {min}..={max}")]
    ScoreOutOfRange {
        field: &'static str,
        value: i64,
        min: u8,
        max: u8,
    },
    #[error("intermediate vector has length {0}, expected 1024")]
    IntermediateLength(usize),
    #[error("image `{0}` has no intermediate feature block")]
    MissingIntermediate(String),
    #[error("label table is empty")]
    EmptyLabels,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("input is empty")]
    Empty,
    #[error("need at least {needed} values, got {actual}")]
    TooFew { needed: usize, actual: usize },
    #[error("R² is undefined for constant truth")]
    ConstantTruth,
    #[error("need at least 2 distinct patients, got {0}")]
    TooFewPatients(usize),
    #[error("split ratio {0} must lie strictly between 0 and 1")]
    InvalidRatio(f64),
    #[error("image `{image}` has {actual} raters, expected {expected} like the others")]
    UnequalRaters {
        image: String,
        expected: usize,
        actual: usize,
    },
    #[error("Fleiss' kappa is undefined: every rating falls in a single category")]
    KappaUndefined,
    #[error("perplexity {perplexity} is infeasible for {n} points (must be < (n - 1) / 3)")]
    InfeasiblePerplexity { perplexity: f64, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("non-finite value during optimisation at iteration {0}")]
    Diverged(usize),
    #[error("missing gradient raster for task `{0}`")]
    MissingRaster(&'static str),
    #[error("raster shape {actual_w}x{actual_h} does not match {expected_w}x{expected_h}")]
    ShapeMismatch {
        expected_w: usize,
        expected_h: usize,
        actual_w: usize,
        actual_h: usize,
    },
    #[error("raster is {width}x{height}, blur needs at least 5x5")]
    RasterTooSmall { width: usize, height: usize },
}
