use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("contraction limit does not exist: [{a},{b}] -> {target} diverges as k^{power}")]
    LimitDiverges {
        a: String,
        b: String,
        target: String,
        power: i32,
    },

    #[error("Fock truncation too small: estimated discarded tail mass {tail:e} exceeds {limit:e}")]
    Precision { tail: f64, limit: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
