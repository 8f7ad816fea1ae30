//! Error types shared by every module of the toolkit.

use thiserror::Error;

/// Errors produced by scalar calculus, norm solvers, constructions and
/// certificate runs.
#[derive(Error, Debug, Clone)]
pub enum Error {
    /// A query outside the domain a representation supports.
    #[error("domain error: {0}")]
    Domain(String),

    /// `inverse` could not bracket the requested value.
    #[error("unreachable value: target {target} not attained below t = {t_max}")]
    UnreachableValue { target: f64, t_max: f64 },

    /// A ratio denominator underflowed to zero.
    #[error("underflow: M({lambda}) evaluates to zero in floating point")]
    Underflow { lambda: f64 },

    /// Empirical power envelope failed (indices not compatible with the
    /// requested exponents).
    #[error("envelope failure for (p, q) = ({p}, {q}): {reason}")]
    EnvelopeFailure { p: f64, q: f64, reason: String },

    /// No admissible R below the cap satisfied the selection inequalities.
    #[error(
        "selection failure: no R <= {r_cap} satisfies the inequalities \
         (residuals at cap: lower {lower_residual}, upper {upper_residual})"
    )]
    SelectionFailure {
        r_cap: u32,
        lower_residual: f64,
        upper_residual: f64,
    },

    /// A distance target could not be met below the dimension cap.
    #[error("target unreachable: best distance {achieved} below target {target} for n <= {n_cap}")]
    TargetUnreachable {
        target: f64,
        achieved: f64,
        n_cap: u128,
    },

    /// Malformed caller input (lengths, ranges, missing fields).
    #[error("argument error: {0}")]
    Argument(String),

    /// A stated precondition does not hold for the inputs.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An optimization loop failed to produce a usable result.
    #[error("optimization failure: {0}")]
    Optimization(String),

    /// Quadrature or another numeric routine failed to converge.
    #[error("numeric error at x = {point}: {reason}")]
    Numeric { point: f64, reason: String },

    /// A synthesized function failed its own convexity certificate.
    #[error("synthesis error: {0}")]
    Synthesis(String),

    /// Literal / file parsing problems.
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    /// I/O wrapper for file-backed inputs and outputs.
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn parse(position: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            position,
            message: message.into(),
        }
    }

    /// Exit code the CLI maps this error to (2 usage/parse, 3 numeric).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Argument(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
