use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("weight matrix is not symmetric at ({row}, {col})")]
    AsymmetricInput { row: usize, col: usize },

    #[error("weight matrix has nonzero diagonal at node {0}")]
    NonzeroDiagonal(usize),

    #[error("node {0} has zero degree")]
    IsolatedNode(usize),

    #[error("eigensolver did not converge (residual {residual:e})")]
    ConvergenceFailure { residual: f64 },

    #[error("kernel argument must be nonnegative, got {0}")]
    NegativeArgument(f64),

    #[error("spectrum is degenerate: all eigenvalues equal")]
    DegenerateSpectrum,

    #[error("inadmissible cosine coefficients: {0}")]
    InadmissibleCoefficients(String),

    #[error("at least 2 translates are required, got {0}")]
    TooFewTranslates(usize),

    #[error("lambda_max must be positive, got {0}")]
    NonpositiveLambdaMax(f64),

    #[error("no evaluation points given")]
    EmptyEvalPoints,

    #[error("eigenvalue {eigenvalue} exceeds the kernel bank calibration {lambda_max}")]
    SpectrumExceedsCalibration { eigenvalue: f64, lambda_max: f64 },

    #[error("frame is not tight: bound ratio B/A = {ratio}")]
    NotTight { ratio: f64 },

    #[error("degenerate series: column {0} is constant")]
    DegenerateSeries(usize),

    #[error("k = {k} is too large for {n} nodes")]
    KTooLarge { k: usize, n: usize },

    #[error("graph cannot be connected at any distance threshold")]
    DisconnectedAtAnyThreshold,

    #[error("no connected graph after {attempts} attempts")]
    ConnectivityFailure { attempts: usize },

    #[error("k = {k} out of range 1..={max}")]
    KOutOfRange { k: usize, max: usize },

    #[error("{requested} components requested, at most {max} available")]
    TooManyComponents { requested: usize, max: usize },

    #[error("fold {fold} is too small ({size} samples)")]
    FoldTooSmall { fold: usize, size: usize },

    #[error("input is constant; correlation undefined")]
    ConstantInput,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {key}: {message}")]
    InvalidConfig { key: String, message: String },

    #[error("parse error at row {row}, column {col}: {message}")]
    Parse {
        row: usize,
        col: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn shape_mismatch(expected: impl ToString, actual: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}
