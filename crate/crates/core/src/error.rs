use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not singular (smallest singular value {sigma_min:e} exceeds rank tolerance {rank_tol:e})")]
    NotSingular { sigma_min: f64, rank_tol: f64 },

    #[error("kernel fills the whole space (q = n = {0}); M_perp is undefined")]
    FullKernel(usize),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
        trace: Vec<f64>,
    },

    #[error("singular Jacobian in inner solve: {0}")]
    SingularJacobian(String),

    #[error("point is not an equilibrium (residual {residual:e} > {tol:e})")]
    NotEquilibrium { residual: f64, tol: f64 },

    #[error("singular parameter search failed: {0}")]
    Search(String),

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("graph generation failed after {attempts} attempts (n = {n}, k = {k})")]
    Generation { n: usize, k: usize, attempts: usize },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("degenerate bound: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Input and configuration problems, as opposed to numerical failures.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::Input(_)
                | Error::Dimension { .. }
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension {
            what,
            expected,
            got,
        });
    }
    Ok(())
}
