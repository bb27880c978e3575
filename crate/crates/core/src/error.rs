use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field is not solenoidal (relative divergence {0:.3e})")]
    NotSolenoidal(f64),

    #[error("forcing amplitude is not solenoidal at k = ({}, {}, {})", .0[0], .0[1], .0[2])]
    NonSolenoidalForcing([i32; 3]),

    #[error("forced wavevector ({}, {}, {}) is not retained by the grid", .0[0], .0[1], .0[2])]
    UnresolvedForcing([i32; 3]),

    #[error("shell N = {0} is not a power of two")]
    InvalidShell(u32),

    #[error("shell N = {0} contains no retained modes")]
    EmptyShell(u32),

    #[error("unsupported quadrature order {0}")]
    UnsupportedOrder(usize),

    #[error("increment length {0} outside (-pi, pi)")]
    EllOutOfRange(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite coefficients after step {step}")]
    BlowUp { step: u64 },

    #[error("{path}:{line}: {msg}")]
    Config { path: String, line: usize, msg: String },

    #[error("validation: {0}")]
    Validation(String),

    #[error("malformed {what}: {msg}")]
    Format { what: &'static str, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BlowUp { .. } => 3,
            _ => 2,
        }
    }
}
