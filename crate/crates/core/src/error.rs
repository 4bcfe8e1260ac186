use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Grid sizes must be even and at least 16.
    #[error("invalid grid size {n}: need an even N >= 16")]
    InvalidGridSize { n: usize },

    /// Two fields that must share a grid do not.
    #[error("grid size mismatch: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },

    /// A displacement field does not define a valid orientation-preserving
    /// diffeomorphism (slope at or below the configured floor, or a chart
    /// violation).
    #[error("invalid diffeomorphism: {reason}")]
    InvalidDiffeo { reason: String },

    /// An iterative solve (pointwise inversion or shooting) ran out of
    /// iterations; usually signals a near-degenerate slope or a target
    /// outside the shooting basin.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// The flow left the validity neighborhood (slope floor violated at an
    /// integration stage).
    #[error("blow-up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    /// The Burgers characteristic map lost monotonicity.
    #[error("shock formed by t = {t}: characteristic map not increasing")]
    ShockFormed { t: f64 },

    /// Metric order outside the supported range, or a geodesic operation
    /// invoked with k = 0.
    #[error("metric order {k} not admissible here: {reason}")]
    InvalidOrder { k: u32, reason: String },

    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed data in a CSV file.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
