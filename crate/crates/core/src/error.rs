use thiserror::Error;

use crate::sim::SimLog;

/// Errors produced by the dynamics, estimation, control and simulation layers.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("model is not affine in the unknown parameters (deviation {deviation:e})")]
    InternalModel { deviation: f64 },
    #[error("inertia matrix is ill-conditioned (condition number {condition:e})")]
    SingularDynamics { condition: f64 },
    #[error("invalid gain configuration: {0}")]
    GainConfig(String),
    #[error("payload not yet identifiable: m2_hat = {m2_hat:e}")]
    NotIdentifiable { m2_hat: f64 },
    #[error("thrust too small for attitude allocation: tau(3) = {thrust:e}")]
    ThrustSingularity { thrust: f64 },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("scenarios cannot be compared: {0}")]
    ComparisonMismatch(String),
    #[error("simulation diverged at t = {time} s: {reason}")]
    Diverged {
        time: f64,
        reason: String,
        log: Box<SimLog>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
