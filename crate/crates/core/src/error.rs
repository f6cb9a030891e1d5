use alloc::boxed::Box;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Broad classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Training,
    Corrupt,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("m does not divide d (d={d}, m={m})")]
    Indivisible { d: usize, m: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(&'static str),

    #[error("ragged input: row {row} has length {len}, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },

    #[error("non-finite value at element {index}")]
    NonFinite { index: usize },

    #[error("not enough training points: n={n} < k={k}")]
    TooFewPoints { n: usize, k: usize },

    #[error("degenerate data: only {distinct} distinct points for k={k}")]
    Degenerate { distinct: usize, k: usize },

    #[error("code {code} out of range for k={k} (chunk {chunk})")]
    CodeOutOfRange { chunk: usize, code: usize, k: usize },

    #[error("empty query set")]
    EmptyQueries,

    #[error("subspace {subspace}: {source}")]
    Subspace { subspace: usize, source: Box<Error> },

    #[error("chunk {chunk}: {source}")]
    Chunk { chunk: usize, source: Box<Error> },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Indivisible { .. }
            | Error::DimensionMismatch { .. }
            | Error::Config(_)
            | Error::EmptyQueries => ErrorKind::Config,
            Error::Ragged { .. } | Error::NonFinite { .. } => ErrorKind::Data,
            Error::TooFewPoints { .. } | Error::Degenerate { .. } => ErrorKind::Training,
            Error::CodeOutOfRange { .. } => ErrorKind::Corrupt,
            Error::Subspace { source, .. } | Error::Chunk { source, .. } => source.kind(),
        }
    }

    pub(crate) fn in_subspace(self, subspace: usize) -> Error {
        Error::Subspace {
            subspace,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_chunk(self, chunk: usize) -> Error {
        Error::Chunk {
            chunk,
            source: Box::new(self),
        }
    }
}

pub(crate) fn check_finite(values: &[f32]) -> Result<()> {
    match values.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}
