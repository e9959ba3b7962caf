use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// A rejected configuration entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub key: String,
    pub message: String,
}

impl Problem {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration ({}): {}", keys(.0), details(.0))]
    Config(Vec<Problem>),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("certificate is not valid: LMI eigenvalue {margin:e}, spectral radius {radius}")]
    Design { margin: f64, radius: f64 },
    #[error("scenarios `{first}` and `{second}` do not share a measurement stream")]
    Mismatch { first: String, second: String },
    #[error(transparent)]
    Core(#[from] pmhe::Error),
}

fn keys(problems: &[Problem]) -> String {
    problems.iter().map(|p| p.key.as_str()).collect::<Vec<_>>().join(", ")
}

fn details(problems: &[Problem]) -> String {
    problems
        .iter()
        .map(|p| format!("{}: {}", p.key, p.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config(vec![Problem::new(key, message)])
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for anything the user can fix in the inputs, 3 when an estimator
    /// or solver fails on valid inputs.
    pub fn exit_code(&self) -> u8 {
        use pmhe::Error as E;
        match self {
            Self::Config(_) | Self::Io { .. } | Self::Design { .. } | Self::Mismatch { .. } => 2,
            Self::Core(e) => match e {
                E::Dimension { .. }
                | E::Config(_)
                | E::Placement(_)
                | E::UnsupportedPlacement { .. }
                | E::Schedule(_)
                | E::Range(_)
                | E::Unstable { .. } => 2,
                _ => 3,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
