use thiserror::Error;

/// Failures raised anywhere along the quantization pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("operation requires a separable model (lambda = 0), got lambda = {0}")]
    NotSeparable(f64),
    #[error("no equipotential crossing along direction ({dx}, {dy}) within radius {radius}")]
    UnboundedDirection { dx: f64, dy: f64, radius: f64 },
    #[error("energy drift {drift:e} exceeds bound {bound:e} at t = {t}; reduce the step")]
    StepTooLarge { drift: f64, bound: f64, t: f64 },
    #[error("trajectory escaped the bounding region at t = {t}")]
    Escape { t: f64 },
    #[error("no caustic points found within t_max = {t_max}")]
    InsufficientIntegrationTime { t_max: f64 },
    #[error("degenerate trajectory family: {0}")]
    DegenerateFamily(String),
    #[error("arc {arc} fit failed: residual {residual:e} with {intervals} spline intervals")]
    FitFailure { arc: usize, residual: f64, intervals: usize },
    #[error("arc {arc}: effective potential has no classically allowed region")]
    EmptyWell { arc: usize },
    #[error("arc {arc}: fewer than two turning points")]
    NoOscillatoryRegion { arc: usize },
    #[error("arc {arc}: extension does not reach a decaying region")]
    ExtensionTooShort { arc: usize },
    #[error("inconsistent family: opposite arcs carry {a} and {b} nodes")]
    InconsistentFamily { a: usize, b: usize },
    #[error("no convergence after {iterations} iterations (last defects {defects:?})")]
    NoConvergence { iterations: usize, defects: [f64; 2] },
    #[error("node counts oscillate between iterates; the search straddles two states, try another initial energy")]
    StraddlingStates,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
