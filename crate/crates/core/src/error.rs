use thiserror::Error;

pub type Result<T> = std::result::Result<T, G2Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum G2Error {
    #[error("degree overflow: {0} + {1} > 7")]
    DegreeOverflow(usize, usize),
    #[error("interior product of a degree-0 form")]
    DegreeZero,
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("invalid multi-index: {0}")]
    InvalidIndex(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("metric is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("not a G2 form: {0}")]
    NotG2Form(String),
    #[error("exact mode cannot represent {0}; rerun in float mode")]
    Inexact(String),
    #[error("exact mode does not support {0}")]
    ExactModeUnsupported(&'static str),
    #[error("constraint c^2 + |omega|^2 = 1 violated (residual {residual:e})")]
    ConstraintViolated { residual: f64 },
    #[error("tangent vector violates c*cdot + <omega, omegadot> = 0 (residual {residual:e})")]
    TangencyViolated { residual: f64 },
    #[error("3-form induces a different metric or orientation (residual {residual:e})")]
    MetricMismatch { residual: f64 },
    #[error("no solution within tolerance (residual {residual:e})")]
    NoSolution { residual: f64 },
    #[error("3-form has a nonzero Lambda^3_7 component (norm {norm:e})")]
    HasP7Component { norm: f64 },
    #[error("matrix is not in SO(7)")]
    NotSpecialOrthogonal,
    #[error("subalgebra is not closed under the bracket")]
    NotBracketClosed,
    #[error("subalgebra is not contained in the ambient span")]
    NotInAmbient,
    #[error("a non-Euclidean metric needs an explicit orthonormal frame")]
    NeedsFrame,
    #[error("recovered omega leaves the model subspace (component norm {norm:e})")]
    SubspaceViolation { norm: f64 },
    #[error("recovery failed: {0}")]
    RecoveryFailed(Box<G2Error>),
    #[error("unsupported model for this operation: {0}")]
    UnsupportedModel(String),
    #[error("identity frame is not in N_f: holonomy generator {0} is not in G2")]
    IdentityNotInNf(usize),
    #[error("stored hash does not match regenerated {0}")]
    HashMismatch(&'static str),
    #[error("parse error: {0}")]
    Parse(String),
}
