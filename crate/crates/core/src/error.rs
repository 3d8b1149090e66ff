use thiserror::Error;

/// Failure modes of the LP backend.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Dimension(String),
    #[error("simplex exceeded {0} iterations (cycling safeguard)")]
    IterationLimit(usize),
    #[error("basis matrix became numerically singular")]
    SingularBasis,
    #[error("returned point violates a constraint by {0:e} after repair")]
    Inaccurate(f64),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Lp(#[from] LpError),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("polytope is empty")]
    EmptyPolytope,

    #[error(
        "feasible parameter set is unbounded along the requested direction; \
         the data are not informative enough and new data should be acquired"
    )]
    UnboundedFps,

    #[error("not enough samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("history holds {got} samples, {needed} are required")]
    InsufficientHistory { needed: usize, got: usize },

    #[error("empty intersection of output intervals: lower {lower} (horizon {lower_horizon}) > upper {upper} (horizon {upper_horizon})")]
    EmptyIntersection {
        lower: f64,
        upper: f64,
        lower_horizon: usize,
        upper_horizon: usize,
    },

    #[error("simulation produced a non-finite value at sample {0}")]
    NonFinite(usize),

    #[error("no convergence within {0} iterations")]
    NoConvergence(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("bundle does not match configuration: {0}")]
    BundleMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable category, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Lp(_) => "solver",
            Error::InvalidInput(_) | Error::TooFewSamples { .. } => "input",
            Error::EmptyPolytope | Error::UnboundedFps => "fps",
            Error::InsufficientHistory { .. } => "history",
            Error::EmptyIntersection { .. } => "empty-intersection",
            Error::NonFinite(_) => "simulation",
            Error::NoConvergence(_) => "convergence",
            Error::Config(_) => "config",
            Error::BundleMismatch(_) => "bundle",
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
