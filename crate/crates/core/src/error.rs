use thiserror::Error;

/// Errors produced by ingestion, detection, generation and the experiment harness.
#[derive(Debug, Error)]
pub enum RomaError {
    #[error("parse error at row {row}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        row: usize,
        column: Option<usize>,
        message: String,
    },

    #[error("zero-norm data point(s) at column index {0:?}; remove them before detection")]
    ZeroColumns(Vec<usize>),

    #[error("non-finite entry in data point {column}")]
    NonFinite { column: usize },

    #[error("ambient dimension n={n} is too small: the threshold needs n >= 3")]
    Dimension { n: usize },

    #[error("need at least {required} data points, got {got}")]
    TooFewPoints { required: usize, got: usize },

    #[error("second stage needs at least 2 first-stage inliers, got {survivors}")]
    DegenerateStage { survivors: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "degenerate threshold: zeta = {zeta:.6} rad <= 0 for n={n}, N={num_points}; \
         the ambient dimension is too small for this many points"
    )]
    DegenerateThreshold {
        zeta: f64,
        n: usize,
        num_points: usize,
    },

    #[error(
        "bounded-cone sampler gave up after {draws} draws with {accepted}/{requested} points \
         (acceptance rate {acceptance_rate:.3e}); increase theta_max or reduce count"
    )]
    Infeasible {
        accepted: usize,
        requested: usize,
        draws: usize,
        acceptance_rate: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, RomaError>;

impl RomaError {
    /// Process exit code used by the command line driver: 3 when a generator
    /// is infeasible, 2 for every input or validation error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RomaError::Infeasible { .. } => 3,
            _ => 2,
        }
    }
}
