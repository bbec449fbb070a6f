use thiserror::Error;

/// Errors produced by the simulation engine.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value is outside its domain (non-finite, negative rate, ...).
    #[error("invalid {field}: {constraint}")]
    Domain {
        field: &'static str,
        constraint: String,
    },

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("numerical failure at t={t} (h={h}): {reason}")]
    Numerical { t: f64, h: f64, reason: String },

    #[error("step budget of {max_steps} exhausted at t={t}")]
    MaxSteps { t: f64, max_steps: usize },

    #[error("step size underflow at t={t} (h={h}); problem looks stiff")]
    Stiff { t: f64, h: f64 },

    #[error("time {t} outside integrated span [{t0}, {t1}]")]
    OutOfRange { t: f64, t0: f64, t1: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unknown preset `{name}`; available presets: {available}")]
    UnknownPreset { name: String, available: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("calibration problem: {0}")]
    Calibration(String),

    #[error("plot specification: {0}")]
    Plot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(field: &'static str, constraint: impl Into<String>) -> Self {
        Error::Domain {
            field,
            constraint: constraint.into(),
        }
    }

    /// True for failures of the numerical machinery itself, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical { .. } | Error::MaxSteps { .. } | Error::Stiff { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
