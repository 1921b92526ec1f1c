//! Finite-dimensional laboratory for quantum relations.
//!
//! Operators act on `ℂ^d` (`d ≤ 64`); subspaces of `M_d` are stored as
//! Hilbert-Schmidt orthonormal frames and every structural claim is checked
//! numerically with an explicit tolerance.

pub mod encoding;
pub mod group;
pub mod ideals;
pub mod intrinsic;
pub mod linalg;
pub mod metric;
pub mod opcore;
pub mod relations;
pub mod verify;
pub mod vnalg;

pub use linalg::{CMatrix, C64};
pub use opcore::{OperatorSubspace, Tolerance};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension {0} outside the supported range 1..=64")]
    UnsupportedDimension(usize),
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("invalid tolerance {0}")]
    InvalidTolerance(f64),
    #[error("element not in the algebra (residual {residual:.3e})")]
    NotInAlgebra { residual: f64 },
    #[error("subspace is not a bimodule over the commutant (residual {residual:.3e})")]
    NotBimodule { residual: f64 },
    #[error("subspace is not a left ideal (residual {residual:.3e})")]
    NotLeftIdeal { residual: f64 },
    #[error("matrix is not an orthogonal projection in the algebra (residual {residual:.3e})")]
    NotProjection { residual: f64 },
    #[error("algebra is not the diagonal algebra")]
    NotDiagonal,
    #[error("operands live over different algebras")]
    AlgebraMismatch,
    #[error("relation is not invariant (residual {residual:.3e})")]
    NotInvariant { residual: f64 },
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("unknown built-in `{0}`")]
    UnknownBuiltin(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
