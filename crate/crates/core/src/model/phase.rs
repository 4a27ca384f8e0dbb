use serde::Serialize;

use crate::model::{unperturbed_trajectory, Branch, BranchTrajectory, PulseSequence};
use crate::tensor::Vec3;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosureReport {
    /// `r_u(t_d) - r_l(t_d)` [m]
    pub delta_r: [f64; 3],
    /// `v_u(t_d) - v_l(t_d)` [m/s], after kicks at `t_d`
    pub delta_v: [f64; 3],
    pub closed: bool,
    pub tolerance_r: f64,
    pub tolerance_v: f64,
}

impl ClosureReport {
    pub fn delta_r_norm(&self) -> f64 {
        Vec3::from(self.delta_r).norm()
    }

    pub fn delta_v_norm(&self) -> f64 {
        Vec3::from(self.delta_v).norm()
    }
}

fn path_extent(up: &BranchTrajectory, lo: &BranchTrajectory) -> f64 {
    let (a_lo, a_hi) = up.bounding_box();
    let (b_lo, b_hi) = lo.bounding_box();
    (a_hi.sup(&b_hi) - a_lo.inf(&b_lo)).norm()
}

pub fn closure_check(seq: &PulseSequence) -> Result<ClosureReport> {
    let up = unperturbed_trajectory(seq, Branch::Upper)?;
    let lo = unperturbed_trajectory(seq, Branch::Lower)?;
    Ok(closure_of(seq, &up, &lo))
}

fn closure_of(seq: &PulseSequence, up: &BranchTrajectory, lo: &BranchTrajectory) -> ClosureReport {
    let last = up.segments.len() - 1;
    let dr = up.position_in(last, seq.t_d) - lo.position_in(last, seq.t_d);
    let dv = up.v_final - lo.v_final;
    let tolerance_r = 1e-12 * path_extent(up, lo).max(1.0);
    let tolerance_v = 1e-12 * seq.recoil_velocity().max(1.0);
    ClosureReport {
        delta_r: dr.into(),
        delta_v: dv.into(),
        closed: dr.norm() < tolerance_r && dv.norm() < tolerance_v,
        tolerance_r,
        tolerance_v,
    }
}

/// `(Δr, p̄, φ_s)` at `t_d` for possibly open paths, with
/// `φ_s = -p̄·Δr/ħ` and `p̄ = m (v_u + v_l)/2`.
pub fn separation_phase(seq: &PulseSequence) -> Result<(Vec3, Vec3, f64)> {
    let up = unperturbed_trajectory(seq, Branch::Upper)?;
    let lo = unperturbed_trajectory(seq, Branch::Lower)?;
    let last = up.segments.len() - 1;
    let dr = up.position_in(last, seq.t_d) - lo.position_in(last, seq.t_d);
    let p_bar = (up.v_final + lo.v_final) * (0.5 * seq.mass);
    Ok((dr, p_bar, -p_bar.dot(&dr) / seq.hbar))
}

/// `(S_u - S_l)/ħ` of the free-fall action plus the laser terms
/// `k·r(t_ℓ) + φ_ℓ` of each branch, plus the separation phase when the
/// endpoints differ.
///
/// Every term is formed from branch differences before summing so that
/// large common parts (the mean fall, `z_i`) cancel analytically.
pub fn unperturbed_phase_difference(seq: &PulseSequence) -> Result<f64> {
    let up = unperturbed_trajectory(seq, Branch::Upper)?;
    let lo = unperturbed_trajectory(seq, Branch::Lower)?;
    let m = seq.mass;
    let a = seq.g_vec;

    // L = m v²/2 + m g·r; on one segment both branches share the
    // acceleration, so Δv is constant and Δr is linear in τ.
    let mut action = 0.0;
    for (su, sl) in up.segments.iter().zip(&lo.segments) {
        let h = su.t_end - su.t_start;
        let dv = su.v0 - sl.v0;
        let sv = su.v0 + sl.v0;
        let dr = su.r0 - sl.r0;
        action += 0.5 * m * dv.dot(&(sv * h + a * (h * h)));
        action += m * a.dot(&(dr * h + dv * (0.5 * h * h)));
    }

    let r_ref = seq.r_mean0;
    let mut laser = 0.0;
    let mut dk_total = Vec3::zeros();
    for p in &seq.pulses {
        let ru = up.position(p.time)?;
        let rl = lo.position(p.time)?;
        let dk = p.k_upper - p.k_lower;
        laser += dk.dot(&(ru - r_ref)) + p.k_lower.dot(&(ru - rl));
        laser += p.phi_upper - p.phi_lower;
        dk_total += dk;
    }
    laser += dk_total.dot(&r_ref);

    let (_, _, phi_s) = separation_phase(seq)?;
    Ok(action / seq.hbar + laser + phi_s)
}

/// Phase of the closed unperturbed interferometer.
pub fn phi0(seq: &PulseSequence) -> Result<f64> {
    let rep = closure_check(seq)?;
    if !rep.closed {
        return Err(Error::NotClosed {
            delta_r: rep.delta_r_norm(),
            delta_v: rep.delta_v_norm(),
        });
    }
    unperturbed_phase_difference(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{HBAR, RB87_MASS};
    use crate::model::MachZehnder;

    #[test]
    fn mach_zehnder_is_closed() {
        for (g, k, zi) in [(9.81, 1.61e7, 0.0), (0.0, 3.0, 1.0), (1.0, 0.0, -2.0)] {
            let seq = MachZehnder::new(1.0, k, RB87_MASS, g, HBAR)
                .with_initial(Vec3::new(0.0, 0.0, zi), Vec3::zeros())
                .build()
                .unwrap();
            let rep = closure_check(&seq).unwrap();
            assert!(rep.closed, "{rep:?}");
        }
    }

    #[test]
    fn dropping_last_pulse_opens_velocity() {
        let mut seq = MachZehnder::new(1.0, 2.0, 1.0, 1.0, 1.0).build().unwrap();
        seq.pulses.pop();
        let rep = closure_check(&seq).unwrap();
        assert!(!rep.closed);
        assert!((rep.delta_v_norm() - 2.0).abs() < 1e-14);
        assert!(matches!(phi0(&seq), Err(Error::NotClosed { .. })));
    }

    #[test]
    fn mistimed_middle_pulse_opens_by_twice_recoil_times_delay() {
        let (vr, delta) = (1.5, 0.01);
        let mut seq = MachZehnder::new(1.0, vr, 1.0, 9.81, 1.0).build().unwrap();
        seq.pulses[1].time += delta;
        let rep = closure_check(&seq).unwrap();
        assert!(!rep.closed);
        assert!((rep.delta_r_norm() - 2.0 * vr * delta).abs() < 1e-12);
        assert!(rep.delta_v_norm() < 1e-14);
    }

    #[test]
    fn phi0_without_gravity_is_laser_combination() {
        let seq = MachZehnder::new(1.0, 5.0, 1.0, 0.0, 1.0).build().unwrap();
        assert!(phi0(&seq).unwrap().abs() < 1e-13);
        let seq = MachZehnder::new(1.0, 5.0, 1.0, 0.0, 1.0)
            .with_laser_phases([0.3, -0.2, 0.7])
            .build()
            .unwrap();
        assert!((phi0(&seq).unwrap() - (0.3 + 0.4 + 0.7)).abs() < 1e-13);
    }

    #[test]
    fn phi0_rubidium_gravimeter() {
        let k = 1.61e7;
        let seq = MachZehnder::new(1.0, k, RB87_MASS, 9.81, HBAR).build().unwrap();
        let p = phi0(&seq).unwrap();
        assert!((p + k * 9.81).abs() < 1e-9 * k * 9.81, "{p}");
        assert!((p.abs() - 1.58e8).abs() < 0.01e8);
    }

    #[test]
    fn phi0_matches_brute_force_action() {
        // independent route: absolute actions on each branch by quadrature
        use crate::quadrature::GaussLegendre;
        let seq = MachZehnder::new(0.8, 3.0, 2.0, 4.0, 0.5)
            .with_laser_phases([0.1, 0.2, 0.4])
            .with_initial(Vec3::new(0.1, 0.2, 0.3), Vec3::new(0.0, 0.1, 0.5))
            .build()
            .unwrap();
        let gl = GaussLegendre::new(8);
        let mut s = [0.0; 2];
        for (n, b) in Branch::BOTH.iter().enumerate() {
            let tr = unperturbed_trajectory(&seq, *b).unwrap();
            for (i, seg) in tr.segments.iter().enumerate() {
                s[n] += gl.integrate(seg.t_start, seg.t_end, |t| {
                    let v = tr.velocity_in(i, t);
                    let r = tr.position_in(i, t);
                    0.5 * seq.mass * v.norm_squared() + seq.mass * seq.g_vec.dot(&r)
                });
            }
            for p in &seq.pulses {
                let r = tr.position(p.time).unwrap();
                s[n] += seq.hbar * (p.kick(*b).dot(&r) + p.laser_phase(*b));
            }
        }
        let brute = (s[0] - s[1]) / seq.hbar;
        assert!((phi0(&seq).unwrap() - brute).abs() < 1e-11 * brute.abs().max(1.0));
    }

    #[test]
    fn phi0_independent_of_initial_conditions() {
        let k = 1.61e7;
        let base = MachZehnder::new(1.0, k, RB87_MASS, 9.81, HBAR);
        let p = phi0(&base.build().unwrap()).unwrap();
        for (z, v) in [(1.0, 1.0), (-1.0, 0.5), (0.3, -1.0)] {
            let seq = base
                .clone()
                .with_initial(Vec3::new(0.2, -z, z), Vec3::new(v, 0.1, v))
                .build()
                .unwrap();
            let q = phi0(&seq).unwrap();
            assert!((p - q).abs() < 1e-9 * p.abs(), "{p} {q}");
        }
    }

    #[test]
    fn separation_phase_vanishes_when_closed() {
        let seq = MachZehnder::new(1.0, 2.0, 1.0, 1.0, 1.0).build().unwrap();
        let (dr, _, phi_s) = separation_phase(&seq).unwrap();
        assert_eq!(dr, Vec3::zeros());
        assert_eq!(phi_s, 0.0);
    }
}
