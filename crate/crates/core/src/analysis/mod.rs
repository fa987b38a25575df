//! Exponent estimates and asymptotic fits from exact series.

pub mod estimators;
pub mod fit;
pub mod model;

use thiserror::Error;

pub use estimators::{estimate_column, ln_ratio, nu_estimate, theta_estimate};
pub use fit::{derived_exponents, fit_series, FitOptions, FitReport};
pub use model::{epsilon, eval_model, ln_model, FitParams, Oscillation, Target};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("{rule} needs rows {lo} and {hi}; row {missing} does not exist")]
    MissingRow { rule: String, lo: i64, hi: i64, missing: i64 },
    #[error("range {lo}:{hi} needs row {missing}, which does not exist")]
    MissingRange { lo: u32, hi: u32, missing: u32 },
    #[error("invalid range {0}:{1}")]
    BadRange(u32, u32),
    #[error("fit range has {0} points; at least 8 are needed for 7 parameters")]
    RangeTooShort(usize),
    #[error("no starting point gives a finite objective")]
    NoFiniteStart,
}
