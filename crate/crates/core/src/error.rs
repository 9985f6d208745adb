//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by construction and evaluation routines.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// Division by a jet whose value is below the singularity guard.
    #[error("singular field: division by value {value:.3e} below guard {guard:.3e}")]
    SingularField { value: f64, guard: f64 },

    /// Elementary function evaluated outside its domain (e.g. sqrt of a
    /// non-positive value).
    #[error("domain error in {op}: argument {value:.6e} outside domain")]
    DomainError { op: &'static str, value: f64 },

    /// Metric is singular or too ill-conditioned to invert.
    #[error("singular metric: {0}")]
    SingularMetric(String),

    /// Requested ambient dimension is outside the supported range.
    #[error("unsupported dimension {n}: this build supports 2 ≤ n ≤ {max}")]
    UnsupportedDimension { n: usize, max: usize },

    /// A lattice was declared on a domain with non-periodic axes where only
    /// fully periodic lattices are supported.
    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    /// A grid is too coarse to resolve the requested oscillation.
    #[error("under-resolved grid: axis {axis} has {res} samples, need at least {need}")]
    UnderResolved { axis: usize, res: usize, need: usize },

    /// Prescription target violates the convex-hull feasibility gate.
    #[error("infeasible target: min(k) + eps_bar = {level:.6e} < 0")]
    Infeasible { level: f64 },

    /// Frame matrix is not the identity at the base point where it must be.
    #[error("frame not identity at base point: max deviation {dev:.3e}")]
    FrameNotIdentity { dev: f64 },

    /// Feasibility criterion requested for a relation shape it does not cover.
    #[error("not implemented: {0}")]
    NotImplemented(String),

    /// Finite-difference stencil would leave the domain.
    #[error("boundary proximity: point within {dist:.3e} of a non-periodic boundary, need > {need:.3e}")]
    BoundaryProximity { dist: f64, need: f64 },

    /// Rate fit requested on data without enough positive values.
    #[error("rate undefined: {0}")]
    RateUndefined(String),

    /// Geometry of a bump/plateau does not fit inside the domain.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// Mismatched arities or malformed inputs.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CoreError>;
