use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the prediction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    // field-core
    #[error("cannot read {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("size mismatch: expected {expected} bytes, found {actual}")]
    SizeMismatch { expected: u64, actual: u64 },
    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },
    #[error("invalid shape {shape:?}: {reason}")]
    InvalidShape { shape: Vec<usize>, reason: String },
    #[error("axis {axis} out of range for a {dims}-dimensional field")]
    AxisOutOfRange { axis: usize, dims: usize },
    #[error("slicing needs at least 3 dimensions, field has {dims}")]
    TooFewDims { dims: usize },
    #[error("field is empty")]
    EmptyField,
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },

    // predictors
    #[error("error bound must be positive, got {0}")]
    NonPositiveEps(f64),
    #[error("input sequence is empty")]
    EmptyInput,
    #[error("expected a 2D field, got {dims} dimensions")]
    NotTwoDimensional { dims: usize },
    #[error("expected a 3D field, got {dims} dimensions")]
    NotThreeDimensional { dims: usize },
    #[error("degenerate shape {0:?} for decomposition")]
    DegenerateShape(Vec<usize>),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    // synth
    #[error("grid {m}x{n} exceeds the exact sampling limit")]
    GridTooLargeForExactMethod { m: usize, n: usize },
    #[error("spatial weight covariance entries must be positive")]
    NonPositiveOmega,

    // compressors
    #[error("corrupt codestream: {0}")]
    CorruptStream(String),
    #[error("unknown compressor `{0}`")]
    UnknownCompressor(String),
    #[error("external compressor failed: {0}")]
    ExternalFailure(String),
    #[error("external compressor timed out after {0:.1}s")]
    Timeout(f64),

    // regression
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("design matrix is singular (collinear predictors)")]
    SingularDesign,
    #[error("model has not been trained")]
    UntrainedModel,
    #[error("operation requires a {expected} model, got {got}")]
    WrongModelKind { expected: &'static str, got: &'static str },
    #[error("model file: {0}")]
    ModelFormat(String),

    // evaluation
    #[error("k = {k} folds is invalid for {n} samples")]
    KTooLarge { k: usize, n: usize },
    #[error("true compression ratio is zero")]
    ZeroTrueCr,
    #[error("zero variance in correlation input")]
    ZeroVariance,
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    // use cases
    #[error("target CR {target} outside predicted range [{lo:.3}, {hi:.3}]")]
    TargetOutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("real-evaluation budget of {0} exhausted")]
    BudgetExhausted(usize),

    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
