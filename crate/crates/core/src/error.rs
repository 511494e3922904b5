use thiserror::Error;

/// Errors raised while building or validating simulation inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid CORESET geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid search space: {0}")]
    InvalidSearchSpace(String),
    #[error("invalid C-RNTI {0}: must be in 1..=65535")]
    InvalidRnti(u32),
    #[error("invalid aggregation level {0}: must be one of 1, 2, 4, 8, 16")]
    InvalidAggregationLevel(u32),
    #[error("invalid AL distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid planning request: {0}")]
    InvalidPlanningRequest(String),
}

/// Raised by the hash when an aggregation level has no room in the CORESET.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no candidate of aggregation level {level} fits in a CORESET of {cce_count} CCEs")]
pub struct NoCandidateFits {
    pub level: u32,
    pub cce_count: u32,
}
