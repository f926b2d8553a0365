use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Process exit codes, one per error class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const FORMAT: i32 = 4;
    pub const COMPUTE: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Core(#[from] asrprep_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Wraps a core error that came from touching `path`, so IO failures
    /// name the file.
    pub fn at(path: &Path, err: asrprep_core::Error) -> Self {
        match err {
            asrprep_core::Error::Io(source) => CliError::io(path, source),
            asrprep_core::Error::Format(msg) => CliError::Format(format!("{}: {msg}", path.display())),
            asrprep_core::Error::Arpa { line, msg } => CliError::Format(format!("{}:{line}: {msg}", path.display())),
            other => CliError::Core(other),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Format(_) => "format",
            CliError::Core(e) => match e {
                asrprep_core::Error::InvalidInput(_) => "invalid",
                asrprep_core::Error::Format(_) | asrprep_core::Error::Arpa { .. } => "format",
                asrprep_core::Error::Numerical(_) => "numerical",
                asrprep_core::Error::Io(_) => "io",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" | "invalid" => exit::USAGE,
            "io" => exit::IO,
            "format" => exit::FORMAT,
            _ => exit::COMPUTE,
        }
    }

    /// `error[kind]: message` on one line.
    pub fn line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error[{}]: {msg}", self.kind())
    }
}
