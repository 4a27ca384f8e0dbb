//! Perturbative phase and contrast from loop integrals along the time
//! contour.
//!
//! The phase is `φ0 + φ1 + φ2`: `φ0` from the unperturbed paths, `φ1` the
//! first-order term (the loop integral of `V` plus a wave-packet correction
//! from the Hessian and the packet's second moments), and `φ2` the expectation
//! of the second-order term, a nested loop integral of commutators. The
//! contrast comes from the variance of the operator part of `φ1`.

mod reference;

use serde::Serialize;

use crate::model::{closure_check, phi0, Contour, PulseSequence, QuadOptions};
use crate::potentials::Potential;
use crate::states::GaussianState;
use crate::tensor::{Mat3, Vec3};
use crate::validity::{validity_report, Level, ValidityOptions, ValidityReport};
use crate::{Error, Result};

pub use reference::{mz_cubic_reference, MzCubicReference};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseOptions {
    /// Highest term of the exponential series (1 or 2).
    pub magnus_order: usize,
    /// Highest cumulant (1: phase only, 2: phase and contrast).
    pub cumulant_order: usize,
    pub quad: QuadOptions,
    pub validity: ValidityOptions,
    /// Return a result even when a validity gate refuses.
    pub override_validity: bool,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        Self {
            magnus_order: 2,
            cumulant_order: 2,
            quad: QuadOptions::default(),
            validity: ValidityOptions::default(),
            override_validity: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FirstOrder {
    /// `-(1/ħ) ∮ V dt`
    pub classical: f64,
    /// `-(1/2ħ) ∮ V_ij G_ij(t, t) dt`
    pub wavepacket: f64,
    pub quad_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SecondOrder {
    /// Gradient-gradient part, independent of the packet.
    pub classical: f64,
    /// Parts involving the packet moments.
    pub wavepacket: f64,
    pub quad_error: f64,
}

impl SecondOrder {
    pub fn total(&self) -> f64 {
        self.classical + self.wavepacket
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseBreakdown {
    pub phi0: f64,
    pub phi1_classical: f64,
    pub phi1_wavepacket: f64,
    pub phi2: f64,
    pub phi2_classical: f64,
    pub phi2_wavepacket: f64,
    /// `φ0 + φ1 + φ2`
    pub total: f64,
    /// `φ1 + φ2`
    pub correction: f64,
    pub contrast: f64,
    /// Variance of the leading operator term; `ln C = -variance / 2`.
    pub phase_variance: f64,
    pub quad_error: f64,
    pub magnus_order: usize,
    pub cumulant_order: usize,
    pub validity: ValidityReport,
}

fn require_closed(seq: &PulseSequence) -> Result<()> {
    let rep = closure_check(seq)?;
    if rep.closed {
        Ok(())
    } else {
        Err(Error::NotClosed {
            delta_r: rep.delta_r_norm(),
            delta_v: rep.delta_v_norm(),
        })
    }
}

fn frob(a: &Mat3, b: &Mat3) -> f64 {
    a.component_mul(b).sum()
}

/// Both first-order terms.
pub fn phase_first_order(
    seq: &PulseSequence,
    pot: &dyn Potential,
    state: &GaussianState,
    quad: &QuadOptions,
) -> Result<FirstOrder> {
    require_closed(seq)?;
    let contour = Contour::new(seq)?;
    let hbar = seq.hbar;
    let t_i = seq.t_i;
    let v = contour.integrate(|p| pot.value(&p.r, p.t, p.branch), quad)?;
    let wp = contour.integrate(
        |p| {
            let d = pot.derivatives(&p.r, p.t, p.branch, 2)?;
            Ok(frob(&d.hessian, &state.covariance_at(p.t - t_i)))
        },
        quad,
    )?;
    Ok(FirstOrder {
        classical: -v.value / hbar,
        wavepacket: -0.5 * wp.value / hbar,
        quad_error: v.error / hbar + 0.5 * wp.error / hbar,
    })
}

/// Per-point data for the nested integral.
struct Node {
    t: f64,
    tau: f64,
    grad: Vec3,
    hess: Mat3,
    /// `V_ijk G_jk(t, t)`
    third_g: Vec3,
}

/// Expectation of the second-order term,
///
/// `-(1/2ħm) ∮dt ∮^t dt' (t' - t) { V_i V'_i + ½ V'_i V_ijk G_jk(t,t)
///   + ½ V_i V'_ijk G_jk(t',t') + V_ik V'_kj G_ij(t,t') }`,
///
/// where primes mark the inner (earlier) contour time. Each moment pairs the
/// two packet operators that share a time argument: the third-derivative
/// terms carry both operators at one time, the Hessian-Hessian term one at
/// each time.
pub fn phase_second_order(
    seq: &PulseSequence,
    pot: &dyn Potential,
    state: &GaussianState,
    quad: &QuadOptions,
) -> Result<SecondOrder> {
    require_closed(seq)?;
    let contour = Contour::new(seq)?;
    let t_i = seq.t_i;
    let prepare = |p: &crate::model::ContourPoint| -> Result<Node> {
        let d = pot.derivatives(&p.r, p.t, p.branch, 3)?;
        let tau = p.t - t_i;
        Ok(Node {
            t: p.t,
            tau,
            grad: d.gradient,
            hess: d.hessian,
            third_g: d.third.contract_mat(&state.covariance_at(tau)),
        })
    };
    let m = state.mass;
    let classical = contour.integrate_nested(prepare, |o, i| (i.t - o.t) * o.grad.dot(&i.grad), quad)?;
    let wavepacket = contour.integrate_nested(
        prepare,
        |o, i| {
            let hh = o.hess * i.hess;
            let (g, _) = state.two_time_moment(o.tau, i.tau);
            let s = 0.5 * i.grad.dot(&o.third_g) + 0.5 * o.grad.dot(&i.third_g) + frob(&hh, &g);
            (i.t - o.t) * s
        },
        quad,
    )?;
    let pre = -1.0 / (2.0 * seq.hbar * m);
    Ok(SecondOrder {
        classical: pre * classical.value,
        wavepacket: pre * wavepacket.value,
        quad_error: pre.abs() * (classical.error + wavepacket.error),
    })
}

/// Variance of `-(1/ħ) ∮ V_i r̄_i dt` in the state; the double loop integral
/// factorizes into `A = ∮ V_i dt` and `B = ∮ V_i (t - t_i) dt`.
pub fn phase_variance(
    seq: &PulseSequence,
    pot: &dyn Potential,
    state: &GaussianState,
    quad: &QuadOptions,
) -> Result<f64> {
    require_closed(seq)?;
    let contour = Contour::new(seq)?;
    let t_i = seq.t_i;
    let mut a = Vec3::zeros();
    let mut b = Vec3::zeros();
    for axis in 0..3 {
        a[axis] = contour
            .integrate(|p| Ok(pot.gradient(&p.r, p.t, p.branch)?[axis]), quad)?
            .value;
        b[axis] = contour
            .integrate(|p| Ok(pot.gradient(&p.r, p.t, p.branch)?[axis] * (p.t - t_i)), quad)?
            .value;
    }
    let m = state.mass;
    let var = a.dot(&(state.sigma_rr * a))
        + 2.0 * a.dot(&(state.sigma_rp * b)) / m
        + b.dot(&(state.sigma_pp * b)) / (m * m);
    Ok((var / (seq.hbar * seq.hbar)).max(0.0))
}

pub fn contrast(seq: &PulseSequence, pot: &dyn Potential, state: &GaussianState, quad: &QuadOptions) -> Result<f64> {
    Ok((-0.5 * phase_variance(seq, pot, state, quad)?).exp())
}

/// Everything at once, gated by the validity report.
pub fn phase_total(
    seq: &PulseSequence,
    pot: &dyn Potential,
    state: &GaussianState,
    opts: &PhaseOptions,
) -> Result<PhaseBreakdown> {
    if !(1..=2).contains(&opts.magnus_order) {
        return Err(Error::OutOfScope(format!(
            "exponential-series order {} (orders 1 and 2 are implemented)",
            opts.magnus_order
        )));
    }
    if !(1..=2).contains(&opts.cumulant_order) {
        return Err(Error::OutOfScope(format!(
            "cumulant order {} (orders 1 and 2 are implemented)",
            opts.cumulant_order
        )));
    }
    let p0 = phi0(seq)?;
    let first = phase_first_order(seq, pot, state, &opts.quad)?;
    let second = if opts.magnus_order >= 2 {
        phase_second_order(seq, pot, state, &opts.quad)?
    } else {
        SecondOrder {
            classical: 0.0,
            wavepacket: 0.0,
            quad_error: 0.0,
        }
    };
    let variance = if opts.cumulant_order >= 2 {
        phase_variance(seq, pot, state, &opts.quad)?
    } else {
        0.0
    };
    let mut validity = validity_report(seq, pot, state, &opts.validity)?;
    validity.phi1_wavepacket_magnitude = Some(first.wavepacket.abs());

    let correction = first.classical + first.wavepacket + second.total();
    let breakdown = PhaseBreakdown {
        phi0: p0,
        phi1_classical: first.classical,
        phi1_wavepacket: first.wavepacket,
        phi2: second.total(),
        phi2_classical: second.classical,
        phi2_wavepacket: second.wavepacket,
        total: p0 + correction,
        correction,
        contrast: (-0.5 * variance).exp(),
        phase_variance: variance,
        quad_error: first.quad_error + second.quad_error,
        magnus_order: opts.magnus_order,
        cumulant_order: opts.cumulant_order,
        validity,
    };
    if breakdown.validity.level() == Level::Refuse && !opts.override_validity {
        let reason = breakdown.validity.violations(Level::Refuse).join(", ");
        return Err(Error::ValidityRefused {
            reason: format!("{reason} at or above {:e}", breakdown.validity.thresholds.refuse),
            breakdown: Box::new(breakdown),
        });
    }
    Ok(breakdown)
}
