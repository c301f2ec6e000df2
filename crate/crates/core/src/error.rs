use std::path::PathBuf;

/// Everything that can go wrong between parsing a coefficient and writing a report.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("division by zero")]
    DivisionByZero,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation failed at (x1={x1}, y1={y1}, y2={y2}): {source}")]
    EvalAt {
        x1: f64,
        y1: f64,
        y2: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("element aspect ratio {ratio:.2} exceeds the limit {limit}")]
    AspectRatio { ratio: f64, limit: f64 },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eliminating every degree of freedom leaves an empty system")]
    EmptyComplement,

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotSpd { row: usize, pivot: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (best residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("no positive principal eigenvalue: weight average {average:e} is nonnegative or the weight has no positive part")]
    NoPositivePrincipal { average: f64 },

    #[error("could not bracket the principal eigenvalue below mu = {mu_max:e}")]
    Unbracketable { mu_max: f64 },

    #[error("principal eigenvector has nonpositive weighted norm {value:e}")]
    InvalidPrincipal { value: f64 },

    #[error("only {found} of {requested} requested positive eigenvalues were found")]
    PartialSpectrum { found: usize, requested: usize },

    #[error("dense oracle limited to dimension {max}, got {n}")]
    SizeExceeded { n: usize, max: usize },

    #[error("hypothesis H6 violated: {reason}")]
    H6Violated { reason: String, scan: Vec<(f64, f64)> },

    #[error("hypothesis {hypothesis} violated: {reason}")]
    Hypothesis { hypothesis: String, reason: String },

    #[error("rod mesh under-resolved: m1 = {m1}, need at least {required_m1}")]
    UnderResolved { m1: usize, required_m1: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Failures caused by the coefficients not satisfying the standing hypotheses
    /// (as opposed to numerical or usage errors).
    pub fn is_hypothesis_failure(&self) -> bool {
        match self {
            Error::NoPositivePrincipal { .. }
            | Error::Unbracketable { .. }
            | Error::H6Violated { .. }
            | Error::Hypothesis { .. } => true,
            Error::Stage { source, .. } | Error::EvalAt { source, .. } => {
                source.is_hypothesis_failure()
            }
            _ => false,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips stage labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
