use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field of length {found} does not match grid with {expected} nodes")]
    Misaligned { expected: usize, found: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("singular pivot {pivot:e} at row {row}")]
    SingularPivot { row: usize, pivot: f64 },

    #[error("degenerate diffusivity f(phi) = {f:e} at xi = {xi}")]
    Degenerate { xi: f64, f: f64 },

    #[error("shooting did not converge: {0}")]
    NoConvergence(String),

    #[error("blow-up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported derivative order k = {k}, j = {j}")]
    UnsupportedOrder { k: usize, j: usize },

    #[error("boundary compatibility violated: {0}")]
    Compatibility(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("inconsistent estimate: {0}")]
    Inconsistent(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
