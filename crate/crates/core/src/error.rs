use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian: max |h - h†| = {0:e}")]
    NotHermitian(f64),

    #[error("matrix is not unitary: max |u u† - 1| = {0:e}")]
    NotUnitary(f64),

    #[error("{routine} did not converge after {sweeps} sweeps (off-diagonal {residual:e})")]
    NoConvergence {
        routine: &'static str,
        sweeps: usize,
        residual: f64,
    },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("degenerate chessboard parameters: |v5| and |v6| must be at least {0:e}")]
    DegenerateParameters(f64),

    #[error("criterion does not apply: {0}")]
    NotApplicable(String),

    #[error("expectation value has imaginary residue {0:e}")]
    ImaginaryResidue(f64),

    #[error("operator Schmidt decomposition residual {0:e} exceeds 1e-6")]
    SchmidtResidual(f64),

    #[error("design optimization did not converge: best relative frame-potential gap {best_gap:e}")]
    DesignNotConverged { best_gap: f64 },

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
