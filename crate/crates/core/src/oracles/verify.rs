//! Side-by-side comparison of the engine with the oracles.

use serde::Serialize;

use super::{classical_oracle, quantum_oracle_1d, wrap_near, ClassicalOptions, InitialWave, QuantumOptions};
use crate::engine::{phase_total, PhaseBreakdown, PhaseOptions};
use crate::model::PulseSequence;
use crate::potentials::Potential;
use crate::states::GaussianState;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerifyTolerances {
    /// Total phase against `arg <ψ_l|ψ_u>`, relative to the engine total.
    pub phase_rel: f64,
    /// Contrast against `|<ψ_l|ψ_u>|`.
    pub contrast_abs: f64,
    /// Classical correction `φ1_cl + φ2_cl` against the classical oracle,
    /// relative to the oracle correction.
    pub classical_rel: f64,
    /// Floor added to every phase tolerance.
    pub phase_abs_floor: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self {
            phase_rel: 1e-3,
            contrast_abs: 1e-3,
            classical_rel: 1e-3,
            phase_abs_floor: 1e-9,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    pub engine: PhaseOptions,
    pub classical: Option<ClassicalOptions>,
    /// Run the wave-function oracle with this initial state.
    pub quantum: Option<(InitialWave, QuantumOptions)>,
    pub tolerances: VerifyTolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRow {
    pub quantity: String,
    pub engine: f64,
    pub oracle: f64,
    pub abs_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl VerifyRow {
    fn new(quantity: &str, engine: f64, oracle: f64, tolerance: f64) -> Self {
        let abs_diff = (engine - oracle).abs();
        Self {
            quantity: quantity.to_string(),
            engine,
            oracle,
            abs_diff,
            tolerance,
            pass: abs_diff <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub breakdown: PhaseBreakdown,
    pub classical: Option<super::OracleResult>,
    pub quantum: Option<super::OracleResult>,
    pub rows: Vec<VerifyRow>,
    pub passed: bool,
}

/// Runs the engine (ignoring validity refusal) and the requested oracles.
pub fn verify_engine(
    seq: &PulseSequence,
    pot: &dyn Potential,
    state: &GaussianState,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let tol = opts.tolerances;
    let mut eopts = opts.engine;
    eopts.override_validity = true;
    let b = phase_total(seq, pot, state, &eopts)?;
    let mut rows = Vec::new();

    let classical = match &opts.classical {
        Some(c) => {
            let r = classical_oracle(seq, pot, c)?;
            let eng = b.phi1_classical + b.phi2_classical;
            let t = tol.classical_rel * r.correction.abs() + tol.phase_abs_floor + r.diagnostics.convergence_metric.max(0.0);
            rows.push(VerifyRow::new("classical_correction", eng, r.correction, t));
            Some(r)
        }
        None => None,
    };

    let quantum = match &opts.quantum {
        Some((wave, q)) => {
            let r = quantum_oracle_1d(seq, pot, wave, q)?;
            let oracle = wrap_near(r.phase, b.total);
            let t = tol.phase_rel * b.total.abs() + tol.phase_abs_floor;
            rows.push(VerifyRow::new("total_phase", b.total, oracle, t));
            rows.push(VerifyRow::new("contrast", b.contrast, r.contrast, tol.contrast_abs));
            Some(r)
        }
        None => None,
    };

    let passed = rows.iter().all(|r| r.pass);
    Ok(VerifyReport {
        breakdown: b,
        classical,
        quantum,
        rows,
        passed,
    })
}
