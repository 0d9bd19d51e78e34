//! Library side of the `ctlab` command: spec loading, experiment runs and
//! artifact writing. The binary in `main.rs` only parses flags.

pub mod run;
pub mod spec;

pub use run::{run_experiments, run_verify, Format, RunOptions};
pub use spec::{ExperimentKind, ExperimentSpec, FamilySpec};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("spec error: {0}")]
    Spec(String),
    #[error("empty result: {0}")]
    Empty(String),
    #[error("family construction failed: {0}")]
    Family(ctlab::Error),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Lib(ctlab::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) => 2,
            CliError::Empty(_) => 3,
            CliError::Family(_) => 4,
            CliError::Verification(_) => 5,
            CliError::Io(_) | CliError::Lib(_) => 1,
        }
    }
}

impl From<ctlab::Error> for CliError {
    fn from(e: ctlab::Error) -> Self {
        use ctlab::Error as E;
        match e {
            E::EmptySample => CliError::Empty(e.to_string()),
            E::InsufficientDepth(_)
            | E::PathTooShort(_)
            | E::DepthCap { .. }
            | E::InvalidWord(_)
            | E::Precondition(_) => CliError::Spec(e.to_string()),
            e => CliError::Lib(e),
        }
    }
}
