use std::path::PathBuf;

use ahglue_core::GlueError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Glue(#[from] GlueError),
    #[error("{0} run(s) failed, see summary.json")]
    FailedRuns(usize),
    #[error("{0} acceptance check(s) failed")]
    Check(usize),
}

impl HarnessError {
    /// Process exit code: 2 for bad configuration, 3 for solver or stage
    /// failures, 4 for failed checks, 1 for output errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Glue(e) if !e.is_solver_failure() && matches!(e.root(), GlueError::Parameter(_)) => 2,
            HarnessError::Check(_) => 4,
            HarnessError::Glue(_) | HarnessError::FailedRuns(_) => 3,
            HarnessError::Io { .. } | HarnessError::Csv(_) | HarnessError::Json(_) => 1,
        }
    }
}
