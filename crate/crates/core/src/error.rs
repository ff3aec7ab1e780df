use thiserror::Error;

/// Every failure the library can surface.
///
/// Numerical failures carry enough context to tell a caller bug (a point
/// outside the domain, a violated step condition) from an ill-conditioned
/// instance.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point is not strictly interior (min slack {min_slack:e} at row {row})")]
    NonInteriorPoint { row: usize, min_slack: f64 },

    #[error("barrier Hessian is singular")]
    SingularHessian,

    #[error("restricted Hessian is singular (min eigenvalue {min_eig:e})")]
    SingularRestrictedHessian { min_eig: f64 },

    #[error("equality rows are linearly dependent (rank {rank} < {rows})")]
    RankDeficient { rank: usize, rows: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    DidNotConverge {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("step condition violated: eta * dual norm = {value} > 1/2")]
    StepConditionViolated { value: f64 },

    #[error("learning rate left the positive range (1/eta = {inv_eta})")]
    LearningRateOverflow { inv_eta: f64 },

    #[error("no valid adversarial shift exists for this round")]
    BudgetInfeasible,

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("update called without a pending prediction")]
    NoPendingPrediction,

    #[error("points do not span the ambient space")]
    DegenerateSpan,

    #[error("horizon too short: exploration rate gamma = {gamma} exceeds 1/2")]
    HorizonTooShort { gamma: f64 },

    #[error("second-moment matrix is singular")]
    SingularMoment,

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("polytope has empty interior")]
    EmptyInterior,

    #[error("closed-form interior initialisation failed")]
    PhaseOneFailed,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("trace schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("round validity check failed at round {round}: {detail}")]
    InvalidRound { round: usize, detail: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("replicate {replicate}: {source}")]
    InReplicate { replicate: usize, source: Box<Error> },
}

impl Error {
    /// True for failures of an inline validity assertion, as opposed to
    /// usage or numerical errors.
    pub fn is_assertion_failure(&self) -> bool {
        match self {
            Error::InvalidRound { .. } => true,
            Error::InReplicate { source, .. } => source.is_assertion_failure(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
