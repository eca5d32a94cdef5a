//! Double/debiased machine learning for panel data.
//!
//! The crate bundles the pieces needed to study how DML behaves when the data
//! come from a balanced panel with unobserved unit (and optionally period)
//! heterogeneity:
//!
//! - [`paneldata`]: the panel container, design matrices, OLS and the within
//!   transforms shared by every estimator.
//! - [`dgp`]: seeded simulation designs returning a dataset plus the hidden truth.
//! - [`boost`]: least-squares gradient boosted regression trees used as the
//!   nuisance learner, including cross-validated round tuning.
//! - [`crossfit`]: the five sample-splitting strategies.
//! - [`estimators`]: linear baselines, five DML variants and oracle benchmarks.
//! - [`harness`]: Monte Carlo runner, summaries, CSV/JSON/SVG reporting and
//!   the timing benchmark.

pub mod boost;
pub mod crossfit;
pub mod dgp;
mod error;
pub mod estimators;
pub mod harness;
pub mod paneldata;
pub mod rng;

pub use error::{Error, Result};
