//! Error type shared by all solver and analysis operations.

use thiserror::Error;

/// Failure modes of parameter validation, quadrature, integration and
/// analysis. Every operation in the crate returns `Result<_, Error>`.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A scalar input failed validation (non-finite, wrong sign, out of its
    /// documented range).
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The requested operation is outside the mathematical domain of the
    /// model, e.g. asking the undamped equation to pass through a full
    /// rotation it only reaches asymptotically.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature exhausted its subdivision budget before reaching
    /// the requested tolerance.
    #[error("quadrature tolerance not met: requested {requested:e}, achieved {achieved:e}")]
    ToleranceNotMet { requested: f64, achieved: f64 },

    /// The first-integral radicand came out more negative than roundoff can
    /// explain; the bracket evaluation is inconsistent.
    #[error("radicand {value:e} at theta = {theta} is beyond the roundoff floor")]
    NegativeRadicand { theta: f64, value: f64 },

    /// The adaptive integrator drove the step size below the resolvable
    /// limit without satisfying its error bound.
    #[error("step size underflow at tau = {tau} ns (h = {h:e})")]
    StepSizeUnderflow { tau: f64, h: f64 },

    /// The integrated trajectory wandered off the first-integral branch by
    /// more than the safety threshold.
    #[error("first-integral drift {drift:e} at tau = {tau} ns exceeds threshold {threshold:e}")]
    FirstIntegralDrift { tau: f64, drift: f64, threshold: f64 },

    /// The adaptive integrator exceeded its step budget.
    #[error("integrator exceeded {0} steps before reaching the stop condition")]
    StepBudgetExceeded(usize),

    /// An interpolation query fell outside the stored grid.
    #[error("query {query} outside the stored range [{lo}, {hi}]")]
    OutOfRange { query: f64, lo: f64, hi: f64 },

    /// An analysis needs a longer trajectory than was supplied.
    #[error("insufficient range: {0}")]
    InsufficientRange(String),

    /// A constructed trajectory violated one of its structural invariants.
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
}
