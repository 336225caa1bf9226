//! Numerical core for chest X-ray severity scoring from frozen network features.
//!
//! Everything in this crate is pure computation over in-memory tables: linear
//! probes on pre-sigmoid task outputs, patient-grouped repeated evaluation,
//! Fleiss' kappa, t-SNE and saliency-map algebra. File formats, reports and the
//! command-line front end live in the `cxrsev` crate.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. All transcendental functions go through `libm`, so results are
//! bit-identical across platforms for a given seed.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod agreement;
pub mod data;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod metrics;
pub mod regress;
pub mod saliency;
pub mod split;
pub mod task;
pub mod tsne;

pub use error::{Error, Result};
pub use task::Task;
