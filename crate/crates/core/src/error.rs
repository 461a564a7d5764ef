use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {0:?} lies on the fixed set {{0, pi}}^2")]
    OnFixedSet((f64, f64)),

    #[error("two-point state collapsed onto the diagonal (separation {0:e})")]
    Degenerate(f64),

    #[error("start configuration is degenerate for steering; perturb and retry: {0}")]
    NeedsPerturbation(String),

    #[error("steering search exhausted its budget after {evaluations} evaluations")]
    SearchBudgetExceeded { evaluations: u64 },

    #[error("finite-difference matrix is ill-conditioned: entry changed by {max_change:e} under h -> h/2")]
    IllConditioned { max_change: f64 },

    #[error("boundary refinement overflow: {vertices} vertices exceeds the budget of {budget}")]
    RefinementOverflow { vertices: usize, budget: usize },

    #[error("field is not mean-zero: |mean| = {mean:e}")]
    NotMeanZero { mean: f64 },

    #[error("smallest probed clump radius {radius:e} escapes the ball at step {step}")]
    ClumpEscape { step: usize, radius: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
