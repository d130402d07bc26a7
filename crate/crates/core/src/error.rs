use thiserror::Error;

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("tree too large: {levels} levels exceeds cap of {cap}")]
    Size { levels: usize, cap: usize },

    #[error("level {level} out of range 0..={max}")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("spec/tree mismatch: {0}")]
    Mismatch(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("bisection bracket has no sign change at node {node}")]
    Bracket { node: usize },

    #[error("degenerate anchor: acceptance set has no finite cash floor (node {node})")]
    DegenerateAnchor { node: usize },

    #[error("absolute continuity violated at level {level}, node {node}")]
    AbsoluteContinuity { level: usize, node: usize },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("comparison not guaranteed at this dt (slope margin {margin})")]
    ComparisonNotGuaranteed { margin: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RiskError {
    /// True for failures caused by floating-point evaluation rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            RiskError::Numeric(_) | RiskError::Bracket { .. } | RiskError::ComparisonNotGuaranteed { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, RiskError>;
