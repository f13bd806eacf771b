use thiserror::Error;

/// Errors raised by curve construction, operator assembly and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid discretization: {0}")]
    Discretization(String),

    #[error("degenerate or self-intersecting curve: {0}")]
    DegenerateCurve(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("ill-conditioned system (condition number {condition:.3e}): {context}")]
    IllConditioned { condition: f64, context: String },

    #[error(
        "single layer operator is not invertible on this curve (logarithmic capacity close to 1); rescale the curve"
    )]
    CapacityDegenerate,

    #[error("measurement radius {radius} does not enclose the curve (max node radius {max_radius})")]
    RadiusInsideHull { radius: f64, max_radius: f64 },

    #[error("target point lies on the boundary (distance {distance:.3e})")]
    TargetOnBoundary { distance: f64 },

    #[error("Bessel zero: wave modes {modes:?} vanish on the boundary and must be dropped")]
    BesselZero { modes: Vec<i32> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
