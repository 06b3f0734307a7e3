use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("point outside the neck region: {0}")]
    OutOfNeck(String),
    #[error("point outside the fluid domain: {0}")]
    OutsideDomain(String),
    #[error("unimplemented variant: {0}")]
    Unimplemented(String),
    #[error("kernel evaluated at its source point")]
    Singular,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("config parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 1 validation, 2 numerical non-convergence, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Csv(_) => 3,
            Error::Numerical(_) | Error::Singular => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
