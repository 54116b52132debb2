use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Returned when a dense object would exceed the configured qubit limit.
    #[error("{what} with L = {sites} exceeds the dense limit of {limit} qubits")]
    DenseLimit {
        what: &'static str,
        sites: usize,
        limit: usize,
    },

    #[error("basis index {index} out of range for L = {sites}")]
    IndexOutOfRange { index: usize, sites: usize },

    /// The tilted trace dropped below the representable range. Shorten the
    /// horizon or reduce the counting field.
    #[error("trace underflow ({trace:e}) at step {step}")]
    TraceUnderflow { trace: f64, step: usize },

    #[error(
        "power iteration did not converge after {iterations} iterations \
         (last estimate {estimate}, gap estimate {gap:e})"
    )]
    NoConvergence {
        iterations: usize,
        estimate: f64,
        gap: f64,
        last_vector: Vec<f64>,
    },

    #[error("crossover outside grid: steepest slope at s = {at}")]
    CrossoverOutsideGrid { at: f64 },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("missing table entry (ell = {ell}, tau = {tau})")]
    MissingEntry { ell: usize, tau: usize },

    #[error("flip probability p = 1 is deterministic and ergodicity breaking; {0}")]
    Deterministic(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
