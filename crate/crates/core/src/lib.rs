//! Simultaneous prediction intervals for sampled curves.
//!
//! Given `m` sampled survival curves on a shared time grid, the estimators in
//! [`estimators`] produce a band (a box `prod_t [lower_t, upper_t]`) meant to
//! contain a fresh curve from the same distribution with probability
//! `1 - alpha`:
//!
//! * Olshen's method: mean ± k·sd, with `k` calibrated by bootstrap.
//! * Two-sided Olshen: median with separate spreads above and below.
//! * GSPIE: greedy wall retraction checked against a validation split.
//! * Bonferroni-corrected pointwise percentile intervals as a baseline.
//!
//! [`eval`] scores bands for coverage and width and runs the Monte-Carlo
//! harnesses; [`synth`] provides curve distributions with known structure.

pub mod cli;
pub mod curves;
pub mod error;
pub mod estimators;
pub mod eval;
pub mod io;
pub mod rng;
pub mod synth;

pub use curves::{bounding_band, pava_antitonic, project_band, validate_matrix, Alpha, Band, SampleMatrix, TimeGrid};
pub use error::{Result, SpiError};
pub use estimators::Method;
