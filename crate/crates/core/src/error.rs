use crate::tree::NodeRef;

/// Errors raised by dendrogram construction, transforms and validators.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid merge at rank {rank}: {reason}")]
    InvalidMerge { rank: usize, reason: String },

    #[error("node {0} does not belong to this dendrogram")]
    UnknownNode(NodeRef),

    #[error("lowest common ancestor needs two distinct terminals, got {0} twice")]
    SameTerminal(usize),

    #[error("swap mask has length {got}, expected {expected}")]
    MaskLength { expected: usize, got: usize },

    #[error("schema violation at {location}: {reason}")]
    Schema { location: String, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },

    #[error("need n ≥ 2 observations, got {0}")]
    TooFewObservations(usize),

    #[error("matrix entry ({i}, {j}) is negative")]
    Negative { i: usize, j: usize },

    #[error("p-adic operands do not share a context: {0}")]
    ContextMismatch(String),

    #[error("p-adic base must be at least {min}, got {got}")]
    InvalidBase { got: u64, min: u64 },

    #[error("coefficient {value} at level {level} is outside {{-1, 0, +1}}")]
    InvalidCoefficient { level: usize, value: i64 },

    #[error("cannot parse p-adic code {input:?}: {reason}")]
    CodeSyntax { input: String, reason: String },

    #[error("branch matrix is not a valid hierarchy at rank {rank}: {reason}")]
    NotLaminar { rank: usize, reason: String },

    #[error("invalid threshold rule: {0}")]
    InvalidThreshold(String),

    #[error("matrix is not ultrametric: d({x},{z}) exceeds max(d({x},{y}), d({y},{z}))")]
    NotUltrametric { x: usize, y: usize, z: usize },

    #[error("terminal order is not a permutation of 0..{0}")]
    NotPermutation(usize),

    #[error("node of rank {rank} has {got} children, arity is {expected}")]
    Arity {
        rank: usize,
        expected: usize,
        got: usize,
    },

    #[error("dendrogram carries no agglomeration levels")]
    MissingLevels,

    #[error("operation needs at least two terminals")]
    Degenerate,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
