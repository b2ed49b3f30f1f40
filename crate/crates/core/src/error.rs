//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("representations describe different channels (Choi deviation {deviation:.3e} > {tol:.3e})")]
    ChannelsDiffer { deviation: f64, tol: f64 },

    #[error("Kraus list is not linearly independent (rank {rank} of {count})")]
    NotLinearlyIndependent { rank: usize, count: usize },

    #[error("gluing matrix violates I ⪰ CC† (min eigenvalue {min_eig:.3e})")]
    InvalidGluing { min_eig: f64 },

    #[error("coefficient vector norm {norm} exceeds 1")]
    NormTooLarge { norm: f64 },

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("gluing carries no LSP factorization")]
    NotLsp,

    #[error("vectors are not orthonormal (deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("Kraus representation is not canonical: {0}")]
    NotCanonical(String),

    #[error("dilation invariant violated: {0}")]
    InvariantViolation(String),

    #[error("unitary does not represent the channel (residual {residual:.3e})")]
    NotARepresentation { residual: f64 },

    #[error("ancilla dimension {ancilla_dim} is below the Kraus number {kraus_number}")]
    AncillaTooSmall {
        ancilla_dim: usize,
        kraus_number: usize,
    },

    #[error("ancilla dimension equals the Kraus number, so only unit-norm gluing vectors are reachable (got {norm})")]
    NotMaximal { norm: f64 },

    #[error("interference oracle is inconsistent with a gluing of the given channels (residual {residual:.3e})")]
    OracleInconsistent { residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
