use polyagent_core::Error as CoreError;

/// Everything a command can fail with, each mapped to a stable exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("reference error at {location}: {message}")]
    Reference { location: String, message: String },
    #[error("invariant violation at {location}: {message}")]
    Invariant { location: String, message: String },
    #[error("size guard at {location}: {source}")]
    Guard { location: String, source: CoreError },
    #[error("{location}: {source}")]
    Module { location: String, source: CoreError },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Usage(_) => 2,
            CliError::Reference { .. } => 3,
            CliError::Invariant { .. } => 4,
            CliError::Guard { .. } => 5,
            CliError::Module { .. } => 6,
            CliError::Io { .. } => 1,
        }
    }

    pub fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn reference(location: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Reference {
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn invariant(location: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Invariant {
            location: location.into(),
            message: message.into(),
        }
    }

    /// A core error raised while building a declared object: guards keep
    /// their own code, everything else is an invariant violation.
    pub fn building(location: impl Into<String>, e: CoreError) -> Self {
        let location = location.into();
        match e {
            e @ CoreError::SizeGuardExceeded { .. } => CliError::Guard {
                location,
                source: e,
            },
            e => CliError::Invariant {
                location,
                message: e.to_string(),
            },
        }
    }

    /// A core error raised while running an experiment.
    pub fn running(location: impl Into<String>, e: CoreError) -> Self {
        let location = location.into();
        match e {
            e @ CoreError::SizeGuardExceeded { .. } => CliError::Guard {
                location,
                source: e,
            },
            e => CliError::Module {
                location,
                source: e,
            },
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
