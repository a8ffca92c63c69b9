use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] io::Error),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("unsupported maxval {0}, expected 255")]
    UnsupportedMaxval(u32),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("odd dimension {width}x{height}: width and height must be even")]
    OddDimension { width: usize, height: usize },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible payload: target {target} bits exceeds maximum {max} bits")]
    InfeasiblePayload { target: f64, max: f64 },

    #[error("lambda search did not converge: payload {payload} bits, target {target} bits")]
    NoConvergence { payload: f64, target: f64 },

    #[error("syndrome coding infeasible: every coset member changes a wet element")]
    StcInfeasible,

    #[error("capacity exceeded: {bits} message bits for {cover} cover elements")]
    CapacityExceeded { bits: usize, cover: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error("cost map format: {0}")]
    CostFormat(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}
