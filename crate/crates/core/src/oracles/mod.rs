//! Independent routes to the phase, used to check the engine: fully
//! perturbed classical paths, and direct wave-function propagation.

mod classical;
mod quantum;
mod verify;

use serde::Serialize;

pub use classical::{classical_oracle, ClassicalOptions};
pub use quantum::{quantum_oracle_1d, wrap_near, InitialWave, QuantumOptions};
pub use verify::{verify_engine, VerifyOptions, VerifyReport, VerifyRow, VerifyTolerances};

/// Separation of the branch endpoints at `t_d` and the phase it carries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Separation {
    /// `r_u - r_l`
    pub delta_r: [f64; 3],
    /// Mean momentum of the two branches.
    pub p_bar: [f64; 3],
    /// `-p̄·Δr/ħ`
    pub phi_s: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct OracleDiagnostics {
    pub steps_per_segment: Option<usize>,
    /// Richardson error estimate (classical) or the phase change on refinement (wave function).
    pub convergence_metric: f64,
    pub grid_points: Option<usize>,
    pub dx: Option<f64>,
    pub dt: Option<f64>,
    pub domain: Option<[f64; 2]>,
    pub leakage: Option<f64>,
    pub norm_drift: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    /// Full phase. The wave-function route reports it modulo 2π.
    pub phase: f64,
    /// Phase minus the unperturbed phase; NaN when the route cannot split them.
    pub correction: f64,
    pub contrast: f64,
    pub separation: Separation,
    pub diagnostics: OracleDiagnostics,
}
