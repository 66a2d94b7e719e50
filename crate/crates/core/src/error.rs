use std::path::PathBuf;

use crate::solver::SolveTrace;

/// Errors produced by every stage of the simulate/reconstruct/evaluate pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value at row {row}, col {col}, band {band}")]
    NonFiniteValue { row: usize, col: usize, band: usize },

    #[error("invalid dimensions {height}x{width}x{bands}: all must be at least 1")]
    EmptyDimension {
        height: usize,
        width: usize,
        bands: usize,
    },

    #[error("band {band} out of range (have {bands} bands)")]
    BandOutOfRange { band: usize, bands: usize },

    #[error("band count mismatch: cube has {cube} bands, pattern needs {pattern}")]
    BandCountMismatch { cube: usize, pattern: usize },

    #[error("invalid mosaic pattern: {0}")]
    InvalidPattern(String),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize, usize),
        right: (usize, usize, usize),
    },

    #[error("measurement vector is zero but the residual is not")]
    ZeroMeasurement,

    #[error("pixel ({row}, {col}) has no measured sample within kernel reach")]
    EmptyMask { row: usize, col: usize },

    #[error("image {height}x{width} is too small (needs at least {min} per side)")]
    ImageTooSmall {
        height: usize,
        width: usize,
        min: usize,
    },

    #[error("unsupported wavelet order {0} (supported: 1..=4)")]
    UnsupportedWavelet(usize),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("rank {rank} out of range 1..={bands}")]
    RankOutOfRange { rank: usize, bands: usize },

    #[error("initial estimate shape {got:?} does not match frame {expected:?}")]
    InvalidInit {
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },

    #[error("solver diverged at iteration {}: non-finite residual", .trace.iterations)]
    NonFinite { trace: Box<SolveTrace> },

    #[error("reference band {band} has non-positive peak")]
    ZeroPeak { band: usize },

    #[error("every band has infinite PSNR (identical cubes)")]
    AllInfinite,

    #[error("bad magic bytes {found:?}, expected {expected:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("truncated payload: expected {expected} bytes, got {got}")]
    TruncatedPayload { expected: usize, got: usize },

    #[error("unsupported ENVI data type {0}")]
    UnsupportedDataType(u32),

    #[error("unsupported ENVI interleave {0:?}")]
    UnsupportedInterleave(String),

    #[error("ENVI header parse error: {0}")]
    HeaderParseError(String),

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("CSV failure: {0}")]
    Csv(#[from] csv::Error),
}

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidConfig(_)
            | Error::RankOutOfRange { .. }
            | Error::UnsupportedWavelet(_) => ErrorKind::Usage,
            Error::NonFinite { .. }
            | Error::ZeroMeasurement
            | Error::AllInfinite
            | Error::ZeroPeak { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
