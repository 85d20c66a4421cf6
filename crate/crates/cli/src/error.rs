use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] isl_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An input file failed to parse; the path is prepended to the core error.
    #[error("{}: {source}", .path.display())]
    Input {
        path: PathBuf,
        #[source]
        source: isl_core::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const DOMAIN: i32 = 4;
    pub const NON_CONVERGENCE: i32 = 5;
    pub const RESOURCE: i32 = 6;
}

fn core_exit_code(e: &isl_core::Error) -> i32 {
    use isl_core::Error::*;
    match e {
        Io(_) => exit::IO,
        Parse { .. } | Schema { .. } => exit::PARSE,
        Domain(_) | Infeasible(_) | Estimation(_) | WrongOperation(_) => exit::DOMAIN,
        NonConvergence { .. } => exit::NON_CONVERGENCE,
        ResourceGuard(_) => exit::RESOURCE,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) | CliError::Input { source: e, .. } => core_exit_code(e),
            CliError::Usage(_) => exit::USAGE,
            CliError::Io { .. } => exit::IO,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Guidance printed after the message for errors the user can act on.
    pub fn hint(&self) -> Option<&'static str> {
        match self {
            CliError::Core(isl_core::Error::ResourceGuard(_)) => {
                Some("reduce --n or --kmax, or drop large artifacts from --emit")
            }
            CliError::Core(isl_core::Error::NonConvergence { .. }) => {
                Some("best-effort results were written; try a different --objective or a cleaner curve")
            }
            _ => None,
        }
    }
}
