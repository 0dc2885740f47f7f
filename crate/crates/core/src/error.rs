use crate::taxonomy::TreeViolation;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point is not strictly inside the ball (sqrt(c)*|x| = {0})")]
    OutsideBall(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("normal vector has zero length")]
    ZeroNormal,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: usize, classes: usize },
    #[error("class {0} has no samples")]
    EmptyClass(usize),
    #[error("no samples to evaluate")]
    Empty,
    #[error("tree level {level} out of range (tree has {levels} levels)")]
    LevelOutOfRange { level: usize, levels: usize },
    #[error("invalid label tree: {0}")]
    InvalidTree(TreeViolation),
}
