//! Decision procedures: local-time existence, the tail integral test, the
//! potential density and the finiteness verdict built from them.

mod local_time;
mod potential;
mod tail;
mod test_function;
mod verdict;

use thiserror::Error;

use crate::levy::{LevyError, ValidationIssue};

pub use local_time::{local_time_criterion, BlockIntegral, LocalTimeDecision, LocalTimeOptions, LocalTimeOutcome};
pub use potential::{potential_density, potential_sup_bound, PotentialDensity};
pub use tail::{tail_integral_test, ConvergenceDecision, ConvergenceVerdict, TailTestOptions};
pub use test_function::{LeftExtension, TailModel, TestFunction};
pub use verdict::{
    expectation_upper_bound, perpetual_verdict, perpetual_verdict_with, IntegralRecord, PreconditionRecord,
    UndecidedReason, Verdict, VerdictOptions, VerdictReport,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Triplet(#[from] LevyError),
    #[error("invalid test function: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidFunction(Vec<ValidationIssue>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("test function returned {value} at x = {x}")]
    EvaluationError { x: f64, value: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("Fourier inversion unstable at x = {x}: value {value}, error {error}")]
    InversionUnstable { x: f64, value: f64, error: f64 },
}
