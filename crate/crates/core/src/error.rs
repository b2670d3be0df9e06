use thiserror::Error;

/// Errors raised by grid construction, spectral transforms, body geometry and the solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported sphere dimension {0} (only S^1 and S^2 are supported)")]
    UnsupportedDimension(usize),

    #[error("invalid grid resolution: {0}")]
    InvalidResolution(String),

    #[error("degree {degree} exceeds grid capacity: {reason}")]
    BelowNyquist { degree: usize, reason: String },

    #[error("field lives on a different grid (expected {expected}, got {found})")]
    GridMismatch { expected: String, found: String },

    #[error("coefficient vector has {found} entries, expected {expected} for dimension {dimension} and degree {degree}")]
    CoefficientCount {
        dimension: usize,
        degree: usize,
        expected: usize,
        found: usize,
    },

    #[error("harmonic (degree {degree}, order {order}) is not part of the basis up to degree {max_degree}")]
    InvalidHarmonic {
        degree: usize,
        order: i64,
        max_degree: usize,
    },

    #[error("body is not strictly convex: convexity margin {margin:e} is below {threshold:e}")]
    NotStrictlyConvex { margin: f64, threshold: f64 },

    #[error("origin is not interior: minimum support value {min_support:e} is not positive")]
    OriginNotInterior { min_support: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exponent p = {p} is excluded: {reason}")]
    ExcludedExponent { p: f64, reason: String },

    #[error("density outside the hypothesis band [{lower}, {upper}]: measured [{min}, {max}]")]
    OutsideHypothesis {
        lower: f64,
        upper: f64,
        min: f64,
        max: f64,
    },

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attaches the file the error came from.
    pub fn in_file(self, path: impl AsRef<std::path::Path>) -> Error {
        Error::File {
            path: path.as_ref().display().to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
