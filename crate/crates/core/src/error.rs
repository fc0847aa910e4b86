use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed PPM header: {0}")]
    MalformedHeader(String),
    #[error("unexpected end of pixel data")]
    TruncatedPixels,
    #[error("unsupported maxval {0}")]
    UnsupportedMaxval(u32),

    #[error("bad magic")]
    BadMagic,
    #[error("unsupported DMAP version {0}")]
    VersionMismatch(u8),
    #[error("truncated depth payload")]
    TruncatedDepths,
    #[error("truncated mask payload")]
    TruncatedMask,
    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid deformation map: {0}")]
    InvalidMap(String),

    #[error("degenerate foundation: stiffness integral is {0}")]
    DegenerateFoundation(f64),

    #[error("training diverged at epoch {epoch}, step {step}: loss is {loss}")]
    NonFiniteLoss { epoch: usize, step: usize, loss: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("feature {0} has zero variance")]
    ZeroVariance(&'static str),
    #[error("training set contains a single class")]
    SingleClass,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("trial schedules do not match")]
    ScheduleMismatch,
    #[error("force grids do not match")]
    GridMismatch,

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dims(left: (usize, usize), right: (usize, usize)) -> Self {
        Error::DimensionMismatch { left, right }
    }
}
