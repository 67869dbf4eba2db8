use num_complex::Complex64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at node {index} (z = {z})")]
    NonFinite { index: usize, z: Complex64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field support reaches the grid boundary (max |f| on the outer ring = {0:e})")]
    SupportAtBoundary(f64),

    #[error("field support leaves the domain: {0}")]
    SupportOutsideDomain(String),

    #[error("field is not periodic in phi: seam mismatch {0:e}")]
    NonPeriodic(f64),

    #[error("reflection failed at w = {0}")]
    Reflection(Complex64),

    #[error("iteration did not converge after {iterations} steps (measured contraction ratio {ratio:.4})")]
    NonConvergence { iterations: usize, ratio: f64 },

    #[error("normalization failed: |f_c(1)| = {0}")]
    Normalization(f64),

    #[error("vanishing derivative at z = {0}")]
    Degenerate(Complex64),

    #[error("insufficient parameter resolution: {0}")]
    Resolution(String),

    #[error("too few usable rings for the fit: {0}")]
    TooFewRings(usize),

    #[error("unknown check: {0}")]
    UnknownCheck(String),

    #[error("path integrals disagree by {discrepancy:e} (limit {limit:e})")]
    PathDiscrepancy { discrepancy: f64, limit: f64 },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
