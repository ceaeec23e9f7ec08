use std::path::PathBuf;

/// Everything that can end a CLI run, with its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("unknown config key `{key}` for {experiment}")]
    UnknownKey { key: String, experiment: &'static str },

    #[error("bad value {value:?} for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },

    #[error("{path}: no data rows")]
    EmptyCsv { path: PathBuf },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{0}")]
    Numerical(grokbench_core::Error),

    #[error("{failed} check(s) over tolerance")]
    ChecksFailed { failed: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::UnknownKey { .. }
            | CliError::BadValue { .. }
            | CliError::EmptyCsv { .. }
            | CliError::Format { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::ChecksFailed { .. } | CliError::Io { .. } | CliError::Csv(_) => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<grokbench_core::Error> for CliError {
    fn from(e: grokbench_core::Error) -> CliError {
        use grokbench_core::Error as E;
        match e {
            // Invalid parameters are configuration problems, not numerics.
            E::NotPrime(_)
            | E::InvalidFraction(_)
            | E::InvalidExponent(_)
            | E::InvalidConfig(_)
            | E::ModulusMismatch(..)
            | E::ResidueOutOfRange { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}
