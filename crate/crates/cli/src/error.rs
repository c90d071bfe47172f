use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// `--help` / `--version` output; not a failure.
    #[error("{0}")]
    Info(String),
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Numerical(#[from] heatcalc_core::Error),
    #[error("cannot write `{path}`: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config { field: field.to_string(), message: message.into() }
    }

    /// 0 for informational output, 2 for configuration problems, 1 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Info(_) => 0,
            CliError::Config { .. } | CliError::Output { .. } => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
