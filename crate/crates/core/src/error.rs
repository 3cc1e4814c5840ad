use thiserror::Error;

/// Errors shared across the registration stack.
#[derive(Error, Debug)]
pub enum Error {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("{op}: invalid argument: {msg}")]
    InvalidArgument { op: &'static str, msg: String },

    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },

    #[error("parameter `{0}` has no gradient")]
    MissingGrad(String),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("length mismatch: {what} ({lhs} vs {rhs})")]
    LengthMismatch {
        what: &'static str,
        lhs: usize,
        rhs: usize,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("ray origin ({x:.3}, {y:.3}) is not in free space")]
    OriginInObstacle { x: f64, y: f64 },

    #[error("trajectory sampling stuck at pose {pose_index} after {retries} retries")]
    TrajectoryStuck { pose_index: usize, retries: usize },

    #[error("world generation failed: {0}")]
    WorldGeneration(String),

    #[error("non-finite loss at epoch {epoch}: {value}")]
    NonFiniteLoss { epoch: usize, value: f64 },

    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
