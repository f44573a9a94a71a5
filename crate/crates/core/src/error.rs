use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{which} polynomial has a root with modulus {modulus:.6e} inside or on the unit circle")]
    NonInvertible { which: &'static str, modulus: f64 },

    #[error("numerator and denominator polynomials share a root (resultant {resultant:.3e})")]
    CommonRoot { resultant: f64 },

    #[error("parameter {name} = {value} outside domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("spec failed validation: {0}")]
    Validation(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("divergent series or product: {0}")]
    Divergent(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad inputs rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::NonInvertible { .. }
                | Error::CommonRoot { .. }
                | Error::Domain { .. }
                | Error::Validation(_)
                | Error::InsufficientData(_)
                | Error::Parse { .. }
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}
