use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum TemError {
    #[error("{what}: value {value} is outside the domain")]
    Domain { what: &'static str, value: f64 },

    #[error("quadrature did not converge on [{a}, {b}]: estimated error {residual:e} after {evaluations} evaluations")]
    QuadratureNonConvergence {
        a: f64,
        b: f64,
        residual: f64,
        evaluations: usize,
    },

    #[error("conformal factor 1+(1-t)G(theta) = {factor} is not positive")]
    ConformalFactorNonPositive { factor: f64 },

    #[error("no sign change of the alpha residual on [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("N(theta) is not positive anywhere on the bracket")]
    NonPositiveN,

    #[error("{value} is outside the image of the cumulant gradient")]
    OutOfImage { value: f64 },

    #[error("rejection sampling stalled after {rejections} consecutive rejections")]
    RejectionStall { rejections: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("point ({x}, {y}) lies outside the viewport")]
    OutsideViewport { x: f64, y: f64 },

    #[error("radius calibration failed: {0}")]
    Calibration(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error on {path}: {message}")]
    Serialize { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, TemError>;

impl TemError {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        TemError::Domain { what, value }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TemError::Io {
            path: path.into(),
            source,
        }
    }
}
