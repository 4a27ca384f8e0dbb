//! Phase from the classical action along fully perturbed trajectories.
//!
//! Each branch is integrated in deviation variables around its exact
//! unperturbed path, `r = r0 + δr`, so the large free-fall action never enters
//! the numerics:
//!
//! ```text
//! δr'' = -∇V(r0 + δr, t) / m
//! δS'  = m v0·δv + m δv²/2 + m g·δr - V(r0 + δr, t)
//! ```
//!
//! Kicks change `v` and `v0` alike, so `δv` passes through them; each pulse
//! adds `ħ k·δr(t_ℓ)` to the action.

use super::{OracleDiagnostics, OracleResult, Separation};
use crate::model::{unperturbed_phase_difference, unperturbed_trajectory, Branch, BranchTrajectory, PulseSequence};
use crate::potentials::Potential;
use crate::tensor::Vec3;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalOptions {
    pub steps_per_segment: usize,
    /// Repeat with half the step and extrapolate.
    pub richardson: bool,
}

impl Default for ClassicalOptions {
    fn default() -> Self {
        Self {
            steps_per_segment: 10_000,
            richardson: true,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct BranchEnd {
    dr: Vec3,
    dv: Vec3,
    /// `δS/ħ` plus the laser terms `k·δr(t_ℓ)`
    dphase: f64,
}

#[derive(Clone, Copy)]
struct State {
    dr: Vec3,
    dv: Vec3,
    ds: f64,
}

fn integrate_branch(
    seq: &PulseSequence,
    pot: &dyn Potential,
    traj: &BranchTrajectory,
    steps: usize,
) -> Result<BranchEnd> {
    let m = seq.mass;
    let g = seq.g_vec;
    let branch = traj.branch;
    let rhs = |seg: usize, t: f64, s: &State| -> Result<State> {
        let r0 = traj.position_in(seg, t);
        let v0 = traj.velocity_in(seg, t);
        let d = pot.derivatives(&(r0 + s.dr), t, branch, 1)?;
        if !(d.value.is_finite() && d.gradient.iter().all(|x| x.is_finite())) {
            return Err(Error::NonFinite { branch, t });
        }
        Ok(State {
            dr: s.dv,
            dv: -d.gradient / m,
            ds: m * v0.dot(&s.dv) + 0.5 * m * s.dv.norm_squared() + m * g.dot(&s.dr) - d.value,
        })
    };
    let axpy = |s: &State, k: &State, h: f64| State {
        dr: s.dr + k.dr * h,
        dv: s.dv + k.dv * h,
        ds: s.ds + k.ds * h,
    };

    let mut s = State {
        dr: Vec3::zeros(),
        dv: Vec3::zeros(),
        ds: 0.0,
    };
    let mut laser = 0.0;
    let mut pulses = seq.pulses.iter().peekable();
    for (seg, segment) in traj.segments.iter().enumerate() {
        while let Some(p) = pulses.peek() {
            if p.time <= segment.t_start {
                laser += p.kick(branch).dot(&s.dr);
                pulses.next();
            } else {
                break;
            }
        }
        let h = (segment.t_end - segment.t_start) / steps as f64;
        for n in 0..steps {
            let t = segment.t_start + n as f64 * h;
            let k1 = rhs(seg, t, &s)?;
            let k2 = rhs(seg, t + 0.5 * h, &axpy(&s, &k1, 0.5 * h))?;
            let k3 = rhs(seg, t + 0.5 * h, &axpy(&s, &k2, 0.5 * h))?;
            let k4 = rhs(seg, t + h, &axpy(&s, &k3, h))?;
            s = State {
                dr: s.dr + (k1.dr + (k2.dr + k3.dr) * 2.0 + k4.dr) * (h / 6.0),
                dv: s.dv + (k1.dv + (k2.dv + k3.dv) * 2.0 + k4.dv) * (h / 6.0),
                ds: s.ds + (k1.ds + 2.0 * (k2.ds + k3.ds) + k4.ds) * (h / 6.0),
            };
        }
        if !(s.ds.is_finite() && s.dr.iter().all(|x| x.is_finite())) {
            return Err(Error::Integrator(format!(
                "{branch} branch diverged in segment ending at t = {}",
                segment.t_end
            )));
        }
    }
    for p in pulses {
        laser += p.kick(branch).dot(&s.dr);
    }
    Ok(BranchEnd {
        dr: s.dr,
        dv: s.dv,
        dphase: s.ds / seq.hbar + laser,
    })
}

struct Run {
    correction: f64,
    separation: Separation,
}

fn run(seq: &PulseSequence, pot: &dyn Potential, steps: usize) -> Result<Run> {
    let up = unperturbed_trajectory(seq, Branch::Upper)?;
    let lo = unperturbed_trajectory(seq, Branch::Lower)?;
    let eu = integrate_branch(seq, pot, &up, steps)?;
    let el = integrate_branch(seq, pot, &lo, steps)?;
    let last = up.segments.len() - 1;
    let r0u = up.position_in(last, seq.t_d);
    let r0l = lo.position_in(last, seq.t_d);
    // separation terms relative to the unperturbed ones, which are already
    // part of the unperturbed phase
    let dr0 = r0u - r0l;
    let pb0 = (up.v_final + lo.v_final) * (0.5 * seq.mass);
    let dr = dr0 + (eu.dr - el.dr);
    let p_bar = pb0 + (eu.dv + el.dv) * (0.5 * seq.mass);
    let phi_s = -p_bar.dot(&dr) / seq.hbar;
    let d_phi_s = -(pb0.dot(&(eu.dr - el.dr)) + ((eu.dv + el.dv) * (0.5 * seq.mass)).dot(&dr)) / seq.hbar;
    Ok(Run {
        correction: eu.dphase - el.dphase + d_phi_s,
        separation: Separation {
            delta_r: dr.into(),
            p_bar: p_bar.into(),
            phi_s,
        },
    })
}

/// `φ = ΔS/ħ + φ_s` with the laser terms, on fully perturbed classical paths.
pub fn classical_oracle(seq: &PulseSequence, pot: &dyn Potential, opts: &ClassicalOptions) -> Result<OracleResult> {
    if opts.steps_per_segment == 0 {
        return Err(Error::invalid("classical oracle needs at least one step per segment"));
    }
    let base = unperturbed_phase_difference(seq)?;
    let coarse = run(seq, pot, opts.steps_per_segment)?;
    let (correction, error, separation, steps) = if opts.richardson {
        let fine = run(seq, pot, 2 * opts.steps_per_segment)?;
        let delta = fine.correction - coarse.correction;
        (fine.correction + delta / 15.0, delta.abs() / 15.0, fine.separation, 2 * opts.steps_per_segment)
    } else {
        (coarse.correction, f64::NAN, coarse.separation, opts.steps_per_segment)
    };
    Ok(OracleResult {
        phase: base + correction,
        correction,
        contrast: 1.0,
        separation,
        diagnostics: OracleDiagnostics {
            steps_per_segment: Some(steps),
            convergence_metric: error,
            ..Default::default()
        },
    })
}
