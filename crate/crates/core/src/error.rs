use thiserror::Error;

use crate::engine::PhaseBreakdown;
use crate::model::Branch;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unperturbed interferometer is not closed: |Δr(t_d)| = {delta_r:e}, |Δv(t_d)| = {delta_v:e}")]
    NotClosed { delta_r: f64, delta_v: f64 },

    #[error("non-finite integrand on the {branch} branch at t = {t}")]
    NonFinite { branch: Branch, t: f64 },

    #[error("time {t} lies outside the interferometer window [{t_i}, {t_d}]")]
    TimeOutOfRange { t: f64, t_i: f64, t_d: f64 },

    #[error("point ({x}, {y}, {z}) lies outside the grid domain")]
    OutOfDomain { x: f64, y: f64, z: f64 },

    #[error("order-{order} tensor is not symmetric (max deviation {deviation:e})")]
    AsymmetricTensor { order: usize, deviation: f64 },

    #[error("grid cannot provide the request: {0}")]
    InsufficientGrid(String),

    #[error("grid file: {0}")]
    GridFormat(String),

    #[error("out of scope: {0}")]
    OutOfScope(String),

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("wave function leaked onto the grid boundary (probability {leakage:e} > {tolerance:e}); enlarge the grid")]
    NormLeakage { leakage: f64, tolerance: f64 },

    #[error("norm drifted by {deviation:e} during propagation")]
    NormDrift { deviation: f64 },

    #[error("quantum oracle not converged: refining the grid changed the phase by {delta:e} rad (tolerance {tolerance:e})")]
    NotConverged { delta: f64, tolerance: f64 },

    #[error("perturbative expansion refused: {reason}")]
    ValidityRefused {
        reason: String,
        breakdown: Box<PhaseBreakdown>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
