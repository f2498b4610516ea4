use thiserror::Error;

/// Everything that can go wrong while building or analysing a problem.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weights carry no probability mass")]
    ZeroMass,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("spaces do not match: {0}")]
    SpaceMismatch(String),
    #[error("duplicate name `{0}` in finite space")]
    DuplicateName(String),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },
    #[error("empty grid: {0}")]
    EmptyGrid(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("annotation space of size {size} exceeds the cap of {cap}")]
    SpaceTooLarge { size: usize, cap: usize },
    #[error("hypothesis table does not cover every instance: {0}")]
    CoverageGap(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(
        "cross-entropy loss is unbounded: member {member} has a zero entry at \
         (x={x}, label={label}, outcome={outcome})"
    )]
    UnboundedLoss {
        member: usize,
        x: usize,
        label: usize,
        outcome: usize,
    },
    #[error("concentration set for label {label} references outcome {outcome} outside the space")]
    BadSet { label: usize, outcome: usize },
    #[error("labels must differ (got {0} twice)")]
    SameLabel(usize),
    #[error("evidence vector for pair ({i}, {j}) is identically zero")]
    ZeroVector { i: usize, j: usize },
    #[error("missing evidence vector for pair ({i}, {j})")]
    MissingEvidence { i: usize, j: usize },
    #[error("every hypothesis agrees with h0 on the support of the instance distribution")]
    NoWrongHypothesis,
    #[error("separation holds on this class: gamma = {gamma} >= 1/{k}")]
    SeparationHolds { gamma: f64, k: u32 },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("{what} of size {size} exceeds the exhaustive-search cap of {cap}; use randomized mode")]
    CapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
    },
    #[error("no joint member satisfies the constraint")]
    EmptyAfterConstraint,
    #[error("unknown demo `{0}`")]
    UnknownDemo(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
