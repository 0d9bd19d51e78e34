use thiserror::Error;

use crate::moebius::BoundaryPoint;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular matrix")]
    Singular,
    #[error("no isolated fixed points")]
    NoFixedPoints,
    #[error("{0}")]
    Degenerate(String),
    #[error("point is off the surface by {offset:.3e}")]
    OffSurface { offset: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("surface path between the points enters B(O; {n:.4}) (min distance {min:.4})")]
    SurfacePathTooClose { n: f64, min: f64 },
    #[error("depth {requested} exceeds cap {cap}")]
    DepthCap { requested: usize, cap: usize },
    #[error("invalid word: {0}")]
    InvalidWord(String),
    #[error("not reachable at this depth: stalled after {depth} letters")]
    TrackingStalled { depth: usize },
    #[error("disks overlap: disk {0} and disk {1}")]
    DisksOverlap(usize, usize),
    #[error("mapping condition fails for generator {generator} at {witness}")]
    MappingCondition { generator: usize, witness: BoundaryPoint },
    #[error("trace verification failed: {0}")]
    TraceCheck(String),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("sequence member {index} failed discreteness evidence: {reason}")]
    SequenceMember { index: usize, reason: String },
    #[error("CT evaluation did not converge: tail spread {spread:.3e} after {depth} letters")]
    NotConverged { spread: f64, depth: usize },
    #[error("family mistagged or non-discrete: {0}")]
    Mistagged(String),
    #[error("insufficient depth: {0}")]
    InsufficientDepth(String),
    #[error("path too short: {0}")]
    PathTooShort(String),
    #[error("empty sample")]
    EmptySample,
    #[error("no thin part constructed for {0}")]
    NoThinPart(String),
}

pub type Result<T> = std::result::Result<T, Error>;
