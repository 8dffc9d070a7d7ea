use thiserror::Error;

/// Errors raised by the numerical modules and the experiment runner.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid rejected: {0}")]
    GridRejected(String),
    #[error("aliasing guard: characteristic function is {value:.3e} at the Nyquist frequency (limit {limit:.0e})")]
    Aliasing { value: f64, limit: f64 },
    #[error("tail guard: estimated mass outside the grid is {0:.3e}")]
    TailTooHeavy(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("tail-dominated integral (tail fraction {0:.3})")]
    TailDominated(f64),
    #[error("divergent: {0}")]
    Divergent(String),
    #[error("non-finite drift at t={t}, x={x:?}")]
    NonFiniteDrift { t: f64, x: Vec<f64> },
    #[error("cutoff support leaves the grid: {0}")]
    CutoffOutsideGrid(String),
    #[error("no convergence after {iterations} iterations (contraction history {history:?})")]
    NoConvergence { iterations: usize, history: Vec<f64> },
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("scenario `{scenario}`: {source}")]
    Scenario { scenario: String, source: Box<LabError> },
    #[error("output directory busy: {0}")]
    Locked(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

impl LabError {
    /// Configuration or validation problems, as opposed to numerical failures.
    pub fn is_validation(&self) -> bool {
        match self {
            LabError::Config { .. } | LabError::Locked(_) => true,
            LabError::Scenario { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::InvalidParameter(msg.into()))
}
