use thiserror::Error;

/// Errors surfaced by construction and evaluation routines.
///
/// Verdicts (unisolvent / singular / not-square, holds / fails) are not
/// errors; they are ordinary return values.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate cell: {0}")]
    DegenerateCell(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh file parse error at line {line}, column {column}: {message}")]
    MeshParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("bad rational literal `{0}`")]
    BadRational(String),

    #[error("unknown element `{0}`")]
    UnknownElement(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),
}
