use thiserror::Error;

/// Errors produced by boundary construction and the numerical operators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("orientation error: {0}")]
    Orientation(String),

    #[error("non-manifold boundary: {0}")]
    NonManifold(String),

    #[error("degenerate face {face}: area {area:.3e} below floor {floor:.3e}")]
    DegenerateFace { face: usize, area: f64, floor: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("vertex count {n} exceeds configured cap {cap}")]
    VertexCap { n: usize, cap: usize },

    #[error("zero-average constraint violated: |a^T phi| = {value:.3e} exceeds {tol:.3e}")]
    ConstraintViolated { value: f64, tol: f64 },

    #[error("eigensolver failed to converge after {iterations} iterations")]
    EigenFailed { iterations: usize },

    #[error("flow stalled at step {step}: step size underflow after {halvings} halvings")]
    FlowStalled { step: usize, halvings: usize },

    #[error("mesh quality collapsed at step {step}: min face quality {quality:.3e}")]
    QualityCollapse { step: usize, quality: f64 },

    #[error("probe radius {r:.3e} too small for mesh resolution h = {h:.3e}")]
    RadiusTooSmall { r: f64, h: f64 },

    #[error("curvature bound {bound:.3e} violated at {} vertices (first: {:?})",
            violating.len(), violating.iter().take(4).collect::<Vec<_>>())]
    CurvatureBound { bound: f64, violating: Vec<usize> },

    #[error("numerical assertion failed: {0}")]
    NumericalAssertion(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
