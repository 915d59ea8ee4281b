//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("variable sets overlap: {0}")]
    OverlappingVariables(String),

    #[error("dag contains a cycle")]
    CyclicDag,

    #[error("node `{node}` lists undeclared parent `{parent}`")]
    UndeclaredParent { node: String, parent: String },

    #[error("invalid tiny world: {0}")]
    InvalidWorld(String),

    #[error("target rate {target} outside achievable interval ({lo}, {hi}) nats")]
    TargetOutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("non-finite parameter at index {0}")]
    NonFiniteParameter(usize),

    #[error("alpha[{index}] = {value} must be positive and finite")]
    InvalidAlpha { index: usize, value: f64 },

    #[error("dataset is empty")]
    EmptyData,

    #[error("volume needs at least 2 noise draws, got {0}")]
    TooFewNoiseDraws(usize),

    #[error("objective diverged at step {step} (J = {value})")]
    Diverged {
        step: usize,
        value: f64,
        last: Box<crate::model::ToyModelParams>,
    },

    #[error("non-finite gradient at parameter index {0}")]
    NonFiniteGradient(usize),

    #[error("rank-deficient neighborhood: {0}; use a denser grid")]
    RankDeficient(String),

    #[error("need at least {needed} neighbors, found {got}")]
    InsufficientNeighbors { needed: usize, got: usize },

    #[error("insufficient sigma variation at approximately constant distortion: {0}")]
    InsufficientSigmaVariation(String),

    #[error("coupled models were evaluated on different data")]
    MismatchedData,

    #[error("all grid energies are infinite")]
    AllEnergiesInfinite,

    #[error("sigma = {0} must be positive")]
    InvalidSigma(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
