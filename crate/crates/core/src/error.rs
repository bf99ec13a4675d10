use thiserror::Error;

/// Errors raised by the simulation and reconstruction routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid factor dimensions {0:?}: every factor must be 2 or 3")]
    InvalidDims(Vec<usize>),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator acts on factors {expected:?} but the state has {found:?} there")]
    FactorMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("factor index {index} out of range for {len} factors")]
    FactorOutOfRange { index: usize, len: usize },

    #[error("partial trace needs at least one kept factor")]
    EmptyKeep,

    #[error("null outcome: probability {probability:e} below threshold")]
    NullOutcome { probability: f64 },

    #[error("mixed pure/mixed operands")]
    MixedKinds,

    #[error("not a valid density operator: {0}")]
    InvalidDensity(String),

    #[error("expected a {expected} state, got dims {found:?}")]
    WrongShape {
        expected: &'static str,
        found: Vec<usize>,
    },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("chain length {0} out of range (1..={1})")]
    ChainLength(usize, usize),

    #[error("parameter `{name}` = {value} outside {range}")]
    ParameterRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("degenerate analyser setting: back-propagated state has zero norm")]
    DegenerateSetting,

    #[error(
        "wire program of {program} rotations needs at least as many qutrits, chain has {chain}"
    )]
    ProgramTooLong { program: usize, chain: usize },

    #[error("singular design: {0}")]
    Singular(String),

    #[error("count data: {0}")]
    Data(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
