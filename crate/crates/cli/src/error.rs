use std::fmt;
use std::path::PathBuf;

/// Failure of one invocation, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    Config {
        line: Option<usize>,
        key: String,
        message: String,
    },
    Numeric {
        context: String,
        source: zetadist_core::Error,
    },
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numeric { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            line: None,
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps a library error; configuration problems keep exit code 2.
    pub fn from_core(context: &str, e: zetadist_core::Error) -> Self {
        match e {
            zetadist_core::Error::InvalidConfig(v) if !v.is_empty() => CliError::config(&v[0].key, v[0].message.clone()),
            zetadist_core::Error::InvalidParameter { key, message } => CliError::config(key, message),
            e if e.is_config_error() => CliError::config(context, e.to_string()),
            source => CliError::Numeric {
                context: context.into(),
                source,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { line, key, message } => {
                f.write_str("config error")?;
                if let Some(l) = line {
                    write!(f, " at line {l}")?;
                }
                if !key.is_empty() {
                    write!(f, " ({key})")?;
                }
                write!(f, ": {message}")
            }
            CliError::Numeric { context, source } => write!(f, "{context}: {source}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}
