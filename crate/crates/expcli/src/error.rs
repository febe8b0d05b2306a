use ignition_core::Error as CoreError;
use thiserror::Error;

/// Exit codes of the `ignlab` binary.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const SOLVER: i32 = 3;
    pub const PARTIAL: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{module}: {source}")]
    Solver {
        module: &'static str,
        #[source]
        source: CoreError,
    },

    #[error("replay mismatch: {0}")]
    Replay(String),

    #[error("{failed} of {total} sweep cells failed (see failures.csv)")]
    PartialSweep { failed: usize, total: usize },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// Parameter and validation failures are configuration errors whatever
    /// module raised them.
    pub fn from_core(e: CoreError) -> Self {
        CliError::core("config", e)
    }

    pub fn core(module: &'static str, e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { .. } | CoreError::InvalidNonlinearity(_) | CoreError::InvalidProfile(_) => {
                CliError::Config(format!("{module}: {e}"))
            }
            source => CliError::Solver { module, source },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Solver { .. } | CliError::Replay(_) | CliError::Io(_) => exit::SOLVER,
            CliError::PartialSweep { .. } => exit::PARTIAL,
        }
    }
}

/// `map_err` adapter tagging core errors with their module.
pub fn in_module(module: &'static str) -> impl Fn(CoreError) -> CliError {
    move |e| CliError::core(module, e)
}
