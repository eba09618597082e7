//! Air-alert interval analytics: minute-grid rasterization, exploratory
//! statistics, lead-lag feature engineering, and a from-scratch random
//! forest for short-horizon alert forecasting.
//!
//! The pipeline runs in stages:
//!
//! 1. [`ingest`] parses and normalizes raw alert intervals over a study window.
//! 2. [`timegrid`] rasterizes events onto a minute x region binary grid.
//! 3. [`eda`] computes the event-level summary statistics.
//! 4. [`features`] assembles the model dataset: per-region cumulative alert
//!    durations plus calendar features, labeled at a configurable horizon.
//! 5. [`forest`] trains a deterministic random forest classifier.
//! 6. [`eval`] scores models with a temporal split, ROC and AUC.
//!
//! [`synth`] generates planted lead-lag fixtures for testing the pipeline.

pub mod eda;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod ingest;
pub mod synth;
pub mod timegrid;

pub use error::{Error, Result};
