use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the patch-classification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image: {0}")]
    CorruptImage(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("quantization levels must be in 2..=256, got {0}")]
    InvalidLevelCount(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },
    #[error("patch size {size} exceeds image extent {width}x{height}")]
    PatchTooLarge {
        size: usize,
        width: usize,
        height: usize,
    },
    #[error("invalid patch size {0}")]
    InvalidPatchSize(usize),
    #[error("purity must be in (0, 1], got {0}")]
    InvalidPurity(f64),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("patches of mixed sizes: {0} and {1}")]
    MixedPatchSizes(usize, usize),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("pixel value {value} overflows {levels} gray levels")]
    LevelOverflow { value: u8, levels: usize },
    #[error("co-occurrence matrix is not normalized (sum {0})")]
    UnnormalizedMatrix(f64),
    #[error("matrix holds no entries")]
    EmptyMatrix,
    #[error("wavelet transform requires even dimensions, got {width}x{height}")]
    OddDimensions { width: usize, height: usize },
    #[error("unknown extractor {0:?}")]
    UnknownExtractor(String),
    #[error("unsupported angle {0} degrees")]
    UnsupportedAngle(u32),
    #[error("unsupported connectivity {0}")]
    UnsupportedConnectivity(u8),
    #[error("invalid feature file: {0}")]
    InvalidFeatureFile(String),

    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("training data contains a single class")]
    SingleClassInput,
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("invalid svm parameter: {0}")]
    InvalidParameter(String),
    #[error("ensemble has no members")]
    EmptyEnsemble,
    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("class {label} has {count} samples, fewer than k = {k}")]
    ClassTooSmall {
        label: String,
        count: usize,
        k: usize,
    },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("confusion counts are empty")]
    EmptyCounts,
    #[error("invalid fold count {0}")]
    InvalidFoldCount(usize),

    #[error("invalid config: {0}")]
    Config(String),
    #[error("report has no rows")]
    EmptyReport,
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("subset {subset}, extractor {extractor}, k={k}: {source}")]
    Cell {
        subset: String,
        extractor: String,
        k: usize,
        #[source]
        source: Box<Error>,
    },
}

/// Broad classes of failure, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            InvalidLevelCount(_)
            | InvalidPatchSize(_)
            | InvalidPurity(_)
            | UnknownExtractor(_)
            | UnsupportedAngle(_)
            | UnsupportedConnectivity(_)
            | InvalidParameter(_)
            | InvalidFoldCount(_)
            | Config(_) => ErrorKind::Config,
            UnnormalizedMatrix(_) | NonFiniteFeature { .. } => ErrorKind::Numeric,
            Cell { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }
}
