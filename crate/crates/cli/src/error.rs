use std::path::PathBuf;

use cspq_core::ErrorKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] cspq_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error("unsupported version {found} at byte {offset} (expected {expected})")]
    Version { offset: u64, found: u32, expected: u32 },

    #[error("checksum mismatch at byte {offset}: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { offset: u64, stored: u32, computed: u32 },

    #[error("verification failed: {0} mismatches outside the near-tie band")]
    Verification(usize),

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn format(offset: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            offset: offset as u64,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage/config, 2 data/format, 3 verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(e) => match e.kind() {
                ErrorKind::Config => 1,
                ErrorKind::Data | ErrorKind::Training | ErrorKind::Corrupt => 2,
            },
            Error::Usage(_) => 1,
            Error::Io { .. } | Error::Format { .. } | Error::Version { .. } | Error::Checksum { .. } => 2,
            Error::Verification(_) => 3,
        }
    }
}
