//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read config {0}: {1}")]
    Io(String, String),
    #[error("cannot parse config: {0}")]
    Parse(String),
}

#[derive(Debug, Error)]
pub enum BvpError {
    #[error("solver did not converge: {0}")]
    NonConvergence(Box<crate::bvp::Diagnostics>),
    #[error("initial guess does not match the problem mesh: {0}")]
    InvalidGuess(String),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("no boundary-value solve converged; dataset is empty")]
    AllSolvesFailed,
    #[error("dataset i/o failed on {0}: {1}")]
    Io(String, String),
    #[error("malformed dataset: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("requested split has no records for this parameter pair")]
    EmptySplit,
}

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("no surrogate available for aggressiveness pair ({0}, {1})")]
    MissingSurrogate(f64, f64),
    #[error("conditional slice for the ego parameters has no mass")]
    ZeroConditional,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Estimation(#[from] EstimationError),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("artifact i/o failed on {0}: {1}")]
    Io(String, String),
    #[error("manifest mismatch: {0}")]
    Manifest(String),
    #[error("{0}")]
    Other(String),
}
