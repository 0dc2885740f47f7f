use std::io;
use std::path::PathBuf;

use hyperhier_core::taxonomy::TreeViolation;

/// Errors surfaced by the harness, each mapped to its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: FormatError },
    #[error("invalid label tree: {0}")]
    Tree(TreeViolation),
    #[error(transparent)]
    Core(#[from] hyperhier_core::Error),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl HarnessError {
    /// Process exit status for this error; 2 is reserved for usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 3,
            HarnessError::Io { .. } => 4,
            HarnessError::Tree(_) => 6,
            HarnessError::Format {
                source: FormatError::Tree(_),
                ..
            } => 6,
            HarnessError::Core(hyperhier_core::Error::InvalidTree(_)) => 6,
            HarnessError::Format { .. } => 5,
            HarnessError::Core(_) => 7,
            HarnessError::Invariant(_) => 8,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, source: FormatError) -> Self {
        HarnessError::Format {
            path: path.into(),
            source,
        }
    }
}

/// Malformed file contents.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("file is truncated")]
    Truncated,
    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid label tree: {0}")]
    Tree(TreeViolation),
    #[error("{0}")]
    Model(hyperhier_core::Error),
}

impl FormatError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        FormatError::Parse {
            line,
            message: message.into(),
        }
    }
}
