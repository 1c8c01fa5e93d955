use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// A sample or request has the wrong size.
    #[error("size error: {0}")]
    Size(String),
    /// An argument lies outside the domain of a function.
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed coordinate record at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    /// A coordinate file contained no usable CA atoms.
    #[error("no CA atoms found in {0}")]
    EmptyModel(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("integral does not converge: {0}")]
    Divergence(String),
    #[error("serialization failure: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..0.5).contains(&beta) {
        return Err(Error::Parameter(format!(
            "trimming level must lie in [0, 1/2), got {beta}"
        )));
    }
    Ok(())
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!(
            "significance level must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}
