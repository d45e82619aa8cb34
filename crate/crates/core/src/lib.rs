//! Deterministic simulator of a universal learner: enumerate programs in
//! shortlex order, run each on a training split under a step budget, and keep
//! the predictor with the best holdout estimate.

pub mod bounds;
pub mod budget;
pub mod config;
pub mod dataset;
pub mod distributions;
pub mod error;
pub mod harness;
pub mod registry;
pub mod seed;
pub mod universal;
pub mod vm;

pub use budget::StepBudget;
pub use dataset::{Dataset, Sample};
pub use error::{Error, Result};
pub use vm::{BitString, Program};

/// Exact rational used for probabilities and losses.
pub type Rational = num_rational::Ratio<i128>;

pub type LearningCurveF64 = harness::LearningCurve<f64>;
pub type PowerLawFitF64 = harness::PowerLawFit<f64>;
pub type BoundReportF64 = bounds::BoundReport<f64>;
pub type RegretTableF64 = harness::RegretTable<f64>;
