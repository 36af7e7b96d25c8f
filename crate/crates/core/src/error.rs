use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "matrix is not Hermitian (max |A - A^†| = {deviation:e}); use the Hermitian embedding"
    )]
    EmbeddingRequired { deviation: f64 },

    #[error("spectral norm {norm} exceeds 1")]
    NormExceeded { norm: f64 },

    #[error("matrix is singular (smallest singular value {sigma_min:e})")]
    Singular { sigma_min: f64 },

    #[error("row {row} has {nonzeros} nonzeros, more than the declared sparsity {sparsity}")]
    SparsityExceeded {
        row: usize,
        nonzeros: usize,
        sparsity: usize,
    },

    #[error("matrix or vector contains a non-finite entry")]
    NonFinite,

    #[error("cannot normalize the zero vector")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown register `{0}`")]
    UnknownRegister(String),

    #[error("invalid register layout: {0}")]
    InvalidLayout(String),

    #[error("register layouts differ")]
    LayoutMismatch,

    #[error("outcome has probability {probability:e}; cannot post-select")]
    ZeroProbability { probability: f64 },

    #[error("invalid clock configuration: {0}")]
    InvalidClock(String),

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("flag amplitudes violate f^2 + g^2 <= 1 at lambda = {lambda} (f = {f}, g = {g})")]
    FilterViolation { lambda: f64, f: f64, g: f64 },

    #[error("spectral radius {spectral_radius} >= 1: the process has no stable state")]
    NoStableState { spectral_radius: f64 },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Whether the error stems from malformed input or I/O rather than from the
    /// mathematics of a well-formed request.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Io(_))
    }
}
