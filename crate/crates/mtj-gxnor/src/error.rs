use thiserror::Error;

/// Error type shared across the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("operating regime violated: {0}")]
    Regime(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("LLG integration diverged at step {step}")]
    IntegrationFailure { step: usize },

    #[error("empty result: {0}")]
    Empty(String),

    #[error("bad IDX magic: expected {expected:#010x}, got {got:#010x}")]
    BadMagic { expected: u32, got: u32 },

    #[error("truncated file {path}: expected {expected} bytes, got {got}")]
    Truncated {
        path: String,
        expected: usize,
        got: usize,
    },

    #[error("image/label count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable process exit code per error category, used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Regime(_) => 2,
            Error::Config(_) => 3,
            Error::BadMagic { .. } | Error::Truncated { .. } | Error::CountMismatch { .. } => 4,
            Error::Shape { .. } => 5,
            Error::IntegrationFailure { .. } | Error::Divergence { .. } | Error::Empty(_) => 6,
            Error::Io(_) => 7,
        }
    }
}
