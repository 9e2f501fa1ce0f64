use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid edge length {0}: lengths must be positive (or infinite for half-lines)")]
    InvalidLength(f64),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("exponent p = {0} outside the subcritical range (2, 6)")]
    ExponentOutOfRange(f64),

    #[error("graph has no Euler path joining its two half-lines")]
    NotUnfoldable,

    #[error("continuity violated at vertex {vertex}: edge values differ by {mismatch:e}")]
    ContinuityViolation { vertex: usize, mismatch: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("field has zero mass")]
    ZeroMass,

    #[error("grid too coarse at vertex {vertex}: incident edges need at least 3 nodes")]
    TooCoarse { vertex: usize },

    #[error("truncation length {truncation} too short (need at least {required})")]
    TruncationTooShort { truncation: f64, required: f64 },

    #[error("boundary values do not match (difference {0:e})")]
    BoundaryMismatch(f64),

    #[error("energy {energy} fell below the divergence floor {floor}; discretization blow-up")]
    Divergence { energy: f64, floor: f64 },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p > 2.0 && p < 6.0 {
        Ok(())
    } else {
        Err(Error::ExponentOutOfRange(p))
    }
}
