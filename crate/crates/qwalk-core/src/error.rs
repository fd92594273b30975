use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not unitary: ||U U^dagger - I||_F = {defect:.3e}")]
    NotUnitary { defect: f64 },
    #[error("matrix is not special: |det - 1| = {defect:.3e}")]
    NotSpecial { defect: f64 },
    #[error("invalid wire: {0}")]
    InvalidWire(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("empty input: {0}")]
    Empty(String),
}

pub type Result<T> = std::result::Result<T, Error>;
