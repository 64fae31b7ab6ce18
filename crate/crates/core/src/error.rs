use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    /// The elliptic problem has no periodic solution because the source is
    /// not mean-zero.
    #[error("solvability violated: source mean {mean:e} exceeds tolerance {tolerance:e}")]
    Solvability { mean: f64, tolerance: f64 },

    #[error("vacuum: density {min_density:e} is not strictly positive")]
    Vacuum { min_density: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("axis {axis} out of range for a {dim}D grid")]
    Axis { axis: usize, dim: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite values produced at t = {time}")]
    BlowUp { time: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
