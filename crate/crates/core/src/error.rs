use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T> = core::result::Result<T, GlueError>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GlueError {
    #[error("point outside the model domain: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("sample point outside grid: {0}")]
    Extrapolation(String),
    #[error("metric not positive definite at node {node}")]
    NotPositiveDefinite { node: usize },
    #[error("inconsistent splice: {0}")]
    Consistency(String),
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { solver: &'static str, iterations: usize, residual: f64 },
    #[error("Picard iteration failed at step {step}: {reason}")]
    Picard { step: usize, reason: String },
    #[error("{stage} stage: {source}")]
    Stage { stage: &'static str, source: Box<GlueError> },
}

impl GlueError {
    /// Attach a pipeline stage name.
    pub fn in_stage(self, stage: &'static str) -> Self {
        GlueError::Stage { stage, source: Box::new(self) }
    }

    /// The innermost error, skipping stage wrappers.
    pub fn root(&self) -> &GlueError {
        match self {
            GlueError::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// Solver non-convergence or breakdown, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self.root(), GlueError::NoConvergence { .. } | GlueError::Picard { .. })
    }
}
