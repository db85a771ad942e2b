use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} out of domain: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("theta {theta} outside the feasible interval [{lower}, {upper})")]
    InfeasibleTheta { theta: f64, lower: f64, upper: f64 },

    #[error("SU {su} has an empty feasible interval: lower {lower} >= upper {upper}")]
    InfeasibleUser { su: usize, lower: f64, upper: f64 },

    #[error(
        "quadrature on [{lower}, {upper}] did not converge after {intervals} subintervals \
         (estimate {estimate:e}, error estimate {error_estimate:e})"
    )]
    Quadrature {
        lower: f64,
        upper: f64,
        intervals: usize,
        estimate: f64,
        error_estimate: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }
}
