//! Validation of soft classifiers.
//!
//! Reference and prediction are both membership matrices (one row per
//! sample, one column per class). From them the crate builds soft confusion
//! matrices under three AND-operators, derives sensitivity, specificity and
//! predictive values in best, expected and worst case, and offers
//! residual-based alternatives together with the bounds that relate them.

pub mod confusion;
pub mod curves;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod measures;
pub mod membership;
pub mod operators;
pub mod oracle;
pub mod regression;
pub mod report;
mod sum;

pub use confusion::{ConfusionMatrix, MatrixKind};
pub use curves::GroupedPredictions;
pub use dataset::{load_dataset, InputFormat, LoadOptions};
pub use error::{Error, Result};
pub use evaluate::{run_evaluation, EvaluationConfig};
pub use measures::{Flavor, Measure, MeasureResult};
pub use membership::{HardeningRule, MembershipMatrix, Tolerances, World};
pub use operators::AndOperator;
pub use report::{EvaluationReport, OutputFormat};
