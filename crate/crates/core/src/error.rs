use thiserror::Error;

/// Errors raised by tree construction, capacity computations and the
/// dyadic-space bridge.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("nonpositive weight {weight} at node {node}")]
    NonpositiveWeight { node: u64, weight: f64 },
    #[error("duplicate node id {0}")]
    DuplicateNode(u64),
    #[error("unknown parent {parent} for node {node}")]
    UnknownParent { node: u64, parent: u64 },
    #[error("tree has no root record")]
    NoRoot,
    #[error("tree has multiple roots ({0} and {1})")]
    MultipleRoots(u64, u64),
    #[error("parent chain of node {0} does not reach the root")]
    DetachedNode(u64),
    #[error("branching factor must be at least 1")]
    InvalidBranching,
    #[error("invalid node id {0}")]
    InvalidNode(u32),
    #[error("exponent p must exceed 1, got {0}")]
    InvalidExponent(f64),
    #[error("kernel parameter s must lie in (0,1), got {0}")]
    InvalidKernelParam(f64),
    #[error("support is not an antichain: node {0} dominates node {1}")]
    NotAntichain(u64, u64),
    #[error("negative mass {mass} at node {node}")]
    NegativeMass { node: u64, mass: f64 },
    #[error("boundary set is empty")]
    EmptyBoundarySet,
    #[error("maximal function undefined for zero measure")]
    ZeroMeasure,
    #[error("measure defined on a tree with {expected} nodes, used with {actual}")]
    MeasureTreeMismatch { expected: usize, actual: usize },
    #[error("optimizer did not converge within {iters} iterations (residual {residual:.3e})")]
    NonConvergence { iters: usize, residual: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid space parameters: {0}")]
    InvalidSpace(String),
    #[error("quadrature level {resolution} too coarse; need at least level {needed}")]
    ResolutionTooCoarse { resolution: u32, needed: u32 },
    #[error("space would need {requested} nodes, cap is {cap}")]
    NodeBudget { requested: u64, cap: u64 },
    #[error("point {0} lies outside the space")]
    PointOutsideSpace(f64),
    #[error("empty set descriptor")]
    EmptySetDescriptor,
    #[error("tree carries no ratio delta")]
    MissingDelta,
    #[error("lambda value {0} outside [0,1]")]
    LambdaOutOfRange(f64),
    #[error("depth {depth} exceeds space depth {max}")]
    DepthTooLarge { depth: u32, max: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;
