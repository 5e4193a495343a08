//! Weekly economic-activity tracking from mixed-frequency time series.
//!
//! This crate estimates a latent weekly activity factor from an unbalanced
//! panel of weekly, monthly, and quarterly indicators using a Bayesian
//! dynamic factor model with dynamic heterogeneity and stochastic
//! volatility, compares model specifications by the conditional deviance
//! information criterion, and derives recession probabilities from the
//! estimated factor with a time-varying-mean Markov-switching model.
//!
//! The pipeline, end to end:
//!
//! 1. [`calendar`]: buckets irregular daily observations into a 48-week
//!    pseudo-week year (4 fixed buckets per month).
//! 2. [`panel`]: assembles the mixed-frequency panel, imputes weekly
//!    gaps, interpolates sparse series from a proxy, and takes
//!    year-over-year log growth rates.
//! 3. [`statespace`]: lays out the state vector and builds the
//!    observation/transition matrices for any model configuration.
//! 4. [`ssmfilter`]: missing-data Kalman filter and simulation smoother.
//! 5. [`samplers`]: conditional posterior draws: loadings by GLS,
//!    autoregressive coefficients, stochastic-volatility paths.
//! 6. [`estimator`]: the Gibbs sampler, posterior storage, conditional
//!    DIC, and the eight-specification comparison grid.
//! 7. [`regime`]: two-state Markov-switching model with episode-specific
//!    means and the threshold-based recession dating rule.
//! 8. [`index`]: rescales the factor to GDP-growth moments and exports
//!    the publishable index with credible bands.
//!
//! [`simulate`] draws synthetic panels from the model's own data-generating
//! process for recovery tests, and [`cli`] wires everything into the batch
//! commands exposed by the `hfei` binary (`prepare`, `estimate`, `grid`,
//! `regime`, `export-index`).
//!
//! See the crate `examples/` directory for one runnable example per major
//! capability.

pub mod calendar;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod index;
pub mod linalg;
pub mod panel;
pub mod regime;
pub mod samplers;
pub mod simulate;
pub mod ssmfilter;
pub mod statespace;

pub use error::{Error, Result};
