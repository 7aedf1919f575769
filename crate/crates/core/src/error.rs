use thiserror::Error;

pub type Result<T> = std::result::Result<T, FwalError>;

#[derive(Debug, Error)]
pub enum FwalError {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric: max asymmetry {asymmetry:e} exceeds {tolerance:e}")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    EigenNotConverged { sweeps: usize, residual: f64 },

    #[error(
        "lanczos did not converge after {iterations} iterations: best eigenvalue {eigenvalue}, residual {residual:e}"
    )]
    LanczosNotConverged {
        iterations: usize,
        eigenvalue: f64,
        eigenvector: Vec<f64>,
        residual: f64,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("divergence detected at iteration {iteration}: {message}")]
    Divergence { iteration: usize, message: String },

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl FwalError {
    /// Short machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            FwalError::DimensionMismatch { .. } => "dimension_mismatch",
            FwalError::InvalidArgument(_) => "invalid_argument",
            FwalError::NotSymmetric { .. } => "not_symmetric",
            FwalError::EigenNotConverged { .. } => "eigen_not_converged",
            FwalError::LanczosNotConverged { .. } => "lanczos_not_converged",
            FwalError::NonFinite(_) => "non_finite",
            FwalError::Invariant(_) => "invariant",
            FwalError::Divergence { .. } => "divergence",
            FwalError::Unsupported(_) => "unsupported",
            FwalError::Io(_) => "io",
            FwalError::Json(_) => "json",
            FwalError::Csv(_) => "csv",
        }
    }
}

pub(crate) fn check_len(expected: usize, got: usize, context: &'static str) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(FwalError::DimensionMismatch { expected, got, context })
    }
}
