use thiserror::Error;

#[derive(Debug, Error)]
pub enum NestError {
    /// All particle weights are zero: the observation is inconsistent with
    /// every particle.
    #[error("particle depletion: all weights zero")]
    ParticleDepletion,

    /// Zero posterior mass in an exact update.
    #[error("observation inconsistent with belief: zero posterior mass")]
    InconsistentObservation,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("domain validation failed:\n{0}")]
    Validation(String),

    #[error("bad configuration: {0}")]
    Config(String),

    #[error("partition mismatch: {0}")]
    PartitionMismatch(String),

    #[error("resource budget exceeded: {0}")]
    ResourceBudget(String),

    #[error("nested particle set level {found} does not match declared level {expected}")]
    LevelMismatch { expected: usize, found: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NestError>;
