use std::path::Path;

use ddg_core::Error as CoreError;

/// Failures of a command, split by exit code: 2 for bad input or usage,
/// 1 for computations that fail on valid input.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                CoreError::Parse { .. }
                | CoreError::Format(_)
                | CoreError::Dimension(_)
                | CoreError::Parameter(_)
                | CoreError::UnsupportedOrder(_)
                | CoreError::Io(_)
                | CoreError::Csv(_)
                | CoreError::Json(_) => 2,
                _ => 1,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches the path to a core error raised while reading or writing it.
pub fn at(path: &Path) -> impl FnOnce(CoreError) -> CliError + '_ {
    move |e| match e {
        CoreError::Io(source) => CliError::io(path, source),
        CoreError::Csv(c) if c.is_io_error() => match c.into_kind() {
            csv::ErrorKind::Io(source) => CliError::io(path, source),
            _ => unreachable!(),
        },
        other => CliError::Usage(format!("{}: {other}", path.display())),
    }
}
