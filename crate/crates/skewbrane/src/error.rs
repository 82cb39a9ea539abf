use thiserror::Error;

/// Errors produced by domain checks, plane arithmetic and the search pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate point at {locus}: smallest singular value {sigma:.3e} below threshold")]
    DegeneratePoint { locus: String, sigma: f64 },

    #[error("degenerate frame: vectors are linearly dependent")]
    DegenerateFrame,

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("convexity loss: restricted support Hessian is near-singular ({0})")]
    ConvexityLoss(String),

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("epsilon {requested:.6} exceeds budget: eps_max = {eps_max:.6}")]
    BudgetExceeded { requested: f64, eps_max: f64 },

    #[error("invalid surface spec: {0}")]
    InvalidSpec(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
