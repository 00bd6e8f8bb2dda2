use thiserror::Error;

/// Errors raised by the inference engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("uniformization rate {lambda} is below the maximal exit rate {max_rate}")]
    RateBelowMaximum { lambda: f64, max_rate: f64 },
    #[error("invalid intensity matrix: {0}")]
    InvalidIntensity(String),
    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid regime partition: {0}")]
    InvalidRegimes(String),
    #[error("invalid network: {0}")]
    InvalidSpec(String),
    #[error("invalid evidence: {0}")]
    InvalidEvidence(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("state space of size {size} exceeds the cap {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("could not find an initial trajectory with finite density after {attempts} attempts")]
    Initialization { attempts: usize },
    #[error("every importance weight is zero")]
    DegenerateWeights,
    #[error("oracle did not converge: step refinement changed the result by {change}")]
    OracleNonConvergence { change: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("pair is not connected by the requested move: {0}")]
    Unreachable(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
