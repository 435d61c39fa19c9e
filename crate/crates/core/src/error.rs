use std::fmt;

use thiserror::Error;

/// Coarse failure category. Every public operation failure maps to exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    Domain,
    HessianNotPositive,
    InfeasibleRadius,
    UndefinedMetric,
    Io,
    Schema,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorKind::Domain => "domain",
            ErrorKind::HessianNotPositive => "hessian-not-positive",
            ErrorKind::InfeasibleRadius => "infeasible-radius",
            ErrorKind::UndefinedMetric => "undefined-metric",
            ErrorKind::Io => "io",
            ErrorKind::Schema => "schema",
        };
        f.write_str(s)
    }
}

/// Row/column position of a bad cell in an input file (both zero-based,
/// rows counted over data records excluding the header).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coordinates {
    pub row: usize,
    pub column: usize,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Hessian not positive: {0}")]
    HessianNotPositive(String),

    #[error("infeasible radius: {0}")]
    InfeasibleRadius(String),

    #[error("{0} undefined: {1}")]
    UndefinedMetric(&'static str, String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("schema error: {message}")]
    Schema { message: String, at: Option<Coordinates> },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain(_) => ErrorKind::Domain,
            Error::HessianNotPositive(_) => ErrorKind::HessianNotPositive,
            Error::InfeasibleRadius(_) => ErrorKind::InfeasibleRadius,
            Error::UndefinedMetric(..) => ErrorKind::UndefinedMetric,
            Error::Io(_) => ErrorKind::Io,
            Error::Schema { .. } => ErrorKind::Schema,
        }
    }

    pub fn coordinates(&self) -> Option<Coordinates> {
        match self {
            Error::Schema { at, .. } => *at,
            _ => None,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        Error::Schema {
            message: msg.into(),
            at: None,
        }
    }

    pub(crate) fn schema_at(msg: impl Into<String>, row: usize, column: usize) -> Self {
        Error::Schema {
            message: msg.into(),
            at: Some(Coordinates { row, column }),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {v}")))
    }
}
