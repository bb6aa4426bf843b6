use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma function pole at z = {0}")]
    Pole(f64),

    #[error("Mittag-Leffler evaluation did not converge (best achieved relative error {achieved:.3e})")]
    NonConvergence { achieved: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("sector condition violated: |arg lambda| = {arg:.6} <= alpha*pi/2 = {threshold:.6}")]
    Sector { arg: f64, threshold: f64 },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("order error: {0}")]
    Order(String),

    #[error("QR iteration failed after {iterations} sweeps ({deflated} of {dim} eigenvalues deflated)")]
    EigenConvergence {
        iterations: usize,
        deflated: usize,
        dim: usize,
    },

    #[error("matrix appears defective (eigenvector condition {cond:.3e} exceeds cap); supply a Jordan hint")]
    Defective { cond: f64 },

    #[error("invalid Jordan hint: {0}")]
    JordanHint(String),

    #[error("spectrum violates the sector condition (margin {margin:.6e})")]
    UnstableSpectrum { margin: f64 },

    #[error("sector test inconclusive: an eigenvalue argument lies within {tol:e} of alpha*pi/2")]
    BoundaryInconclusive { tol: f64 },

    #[error("trajectory grid does not match the operator grid: {0}")]
    GridMismatch(String),

    #[error("nonlinearity evaluation failed: {0}")]
    Evaluation(String),

    #[error("step count too small: {0}")]
    Steps(String),

    #[error("Picard iteration did not reach tolerance after {iterations} iterations (residual {residual:.3e})")]
    PicardNonConvergence { iterations: usize, residual: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}
