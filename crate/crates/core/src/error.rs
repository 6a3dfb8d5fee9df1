use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Root bracketing, quadrature or differentiation failed.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The mode solver could not bracket the fundamental root.
    #[error("solver error: {0}")]
    Solver(String),

    #[error("unsupported beam energy {energy_kev} keV (no penetration depth known; supply a depth table)")]
    UnsupportedEnergy { energy_kev: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error class, as documented in the CLI help.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 3,
            Error::Io { .. } => 4,
            Error::Format(_) => 5,
            Error::Domain(_) | Error::UnsupportedEnergy { .. } => 6,
            Error::Solver(_) => 7,
            Error::Numerical(_) => 8,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Numerical(_) => "numerical",
            Error::Solver(_) => "solver",
            Error::UnsupportedEnergy { .. } => "unsupported_energy",
            Error::Config(_) => "config",
            Error::Format(_) => "format",
            Error::Io { .. } => "io",
        }
    }
}
