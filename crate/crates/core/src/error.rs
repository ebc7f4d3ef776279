use thiserror::Error;

use crate::params::ParameterRecord;

/// Errors raised by the solver pipeline.
///
/// The variants group into the three failure classes the batch front-end maps
/// onto exit codes: configuration, numerical, and singular/conditioning.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value {value} at {location}")]
    NonFinite { location: String, value: f64 },

    #[error("singular saddle-point system (pivot {pivot:.3e} at row {row}); {params}")]
    Singular {
        row: usize,
        pivot: f64,
        params: Box<ParameterRecord>,
    },

    #[error("ill-conditioned {what}: {detail}")]
    Conditioning { what: &'static str, detail: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by bad input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Domain(_))
    }

    /// Process exit status: 2 for input and I/O problems, 3 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Io(_) => 2,
            Error::NonFinite { .. } | Error::Singular { .. } | Error::Conditioning { .. } => 3,
        }
    }
}

pub(crate) fn check_finite(value: f64, location: impl FnOnce() -> String) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite {
            location: location(),
            value,
        })
    }
}
