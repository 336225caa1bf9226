//! File formats, reports and the `cxrsev` command line on top of `cxrsev-core`.

pub mod cli;
pub mod error;
pub mod features;
pub mod labels;
pub mod manifest;
pub mod model;
pub mod pgm;
pub mod report;
mod sheet;
pub mod xgrd;

pub use error::{Error, Result};
