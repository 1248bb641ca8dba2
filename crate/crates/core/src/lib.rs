//! Amplitude-phase separation for spatially correlated functional data.
//!
//! Functions observed at spatial sites are split into amplitude (shape and
//! magnitude after elastic alignment) and phase (the warping that aligns
//! them). Each component gets its own trace-variogram, which drives
//!
//! * three-stage kriging at unobserved sites ([`kriging`]),
//! * spatially weighted amplitude and phase clustering ([`clustering`]),
//! * seeded simulation designs for benchmarking both ([`simgen`]).
//!
//! Everything operates on functions sampled on a common uniform grid over
//! `[0, 1]` ([`fdcore`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod dataset;
pub mod error;
pub mod fdcore;
pub mod io;
pub mod kriging;
pub mod metrics;
pub mod plots;
pub mod preprocess;
pub mod simgen;
pub mod study;
pub mod variogram;

pub use dataset::{Covariates, SpatialDataset};
pub use error::{Error, Result};
pub use fdcore::{Grid, PsiFunction, SampledFunction, Site, SrsfFunction, WarpingFunction};
