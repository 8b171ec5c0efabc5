use crate::qot::SolveFailure;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cost matrix has no nonzero entry; mean normalisation is undefined")]
    ZeroCost,

    #[error("negative cost entry {value} at ({i}, {j})")]
    NegativeCost { i: usize, j: usize, value: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("at least {required} points are required, found {found}")]
    TooFewPoints { required: usize, found: usize },

    #[error("newton solver did not converge: {}", .0.reason)]
    NotConverged(Box<SolveFailure>),

    #[error(
        "support pattern cannot carry a feasible plan: {0}; use a larger or denser initial support"
    )]
    InfeasibleSupport(String),

    #[error(
        "sinkhorn did not converge after {iterations} iterations (row violation {violation:e})"
    )]
    SinkhornNotConverged { iterations: usize, violation: f64 },

    #[error("row {row} of the affinity matrix sums to zero")]
    ZeroRow { row: usize },

    #[error("eigensolver did not converge; worst residual {residual:e}")]
    EigenNotConverged { residual: f64 },

    #[error("input bases are rank deficient after orthonormalisation")]
    RankDeficient,

    #[error("bracket [{lo}, {hi}] does not straddle the target perplexity {target} (achieved {at_lo} .. {at_hi})")]
    BracketMismatch {
        lo: f64,
        hi: f64,
        target: f64,
        at_lo: f64,
        at_hi: f64,
    },

    #[error("mean perplexity is not monotone in epsilon: {0:?}")]
    NonMonotone(Vec<(f64, f64)>),

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
