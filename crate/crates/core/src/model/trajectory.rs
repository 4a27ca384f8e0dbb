use crate::model::{Branch, PulseSequence};
use crate::tensor::Vec3;
use crate::{Error, Result};

/// One ballistic piece of a branch: `r(t) = r0 + v0 τ + ½ a τ²`, `τ = t - t_start`.
/// `v0` is the velocity just after any kick at `t_start`.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub r0: Vec3,
    pub v0: Vec3,
}

/// Piecewise-quadratic unperturbed path of one branch, stored as polynomial
/// coefficients so that evaluation is exact up to rounding.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchTrajectory {
    pub branch: Branch,
    pub accel: Vec3,
    pub segments: Vec<Segment>,
    /// Velocity at `t_d` after any kick delivered at `t_d`.
    pub v_final: Vec3,
    /// Velocity at `t_i` before any kick delivered at `t_i`.
    pub v_initial: Vec3,
}

impl BranchTrajectory {
    pub fn t_start(&self) -> f64 {
        self.segments[0].t_start
    }

    pub fn t_end(&self) -> f64 {
        self.segments[self.segments.len() - 1].t_end
    }

    /// Index of the segment containing `t`; at an interior breakpoint the
    /// later segment is returned.
    pub fn segment_index(&self, t: f64) -> Result<usize> {
        let (t_i, t_d) = (self.t_start(), self.t_end());
        if !(t >= t_i && t <= t_d) {
            return Err(Error::TimeOutOfRange { t, t_i, t_d });
        }
        let idx = self.segments.partition_point(|s| s.t_start <= t);
        Ok(idx.saturating_sub(1).min(self.segments.len() - 1))
    }

    #[inline]
    pub fn position_in(&self, seg: usize, t: f64) -> Vec3 {
        let s = &self.segments[seg];
        let tau = t - s.t_start;
        s.r0 + s.v0 * tau + self.accel * (0.5 * tau * tau)
    }

    #[inline]
    pub fn velocity_in(&self, seg: usize, t: f64) -> Vec3 {
        let s = &self.segments[seg];
        s.v0 + self.accel * (t - s.t_start)
    }

    pub fn position(&self, t: f64) -> Result<Vec3> {
        let seg = self.segment_index(t)?;
        Ok(self.position_in(seg, t))
    }

    /// Velocity at `t`, right-continuous at kicks; at `t_d` kicks delivered at
    /// `t_d` are included.
    pub fn velocity(&self, t: f64) -> Result<Vec3> {
        let seg = self.segment_index(t)?;
        if t == self.t_end() {
            return Ok(self.v_final);
        }
        Ok(self.velocity_in(seg, t))
    }

    /// Polynomial coefficients `[c0, c1, c2]` of segment `seg` in `τ = t - t_start`.
    pub fn coefficients(&self, seg: usize) -> [Vec3; 3] {
        let s = &self.segments[seg];
        [s.r0, s.v0, self.accel * 0.5]
    }

    /// Axis-aligned bounding box of the path, including turning points.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for (n, s) in self.segments.iter().enumerate() {
            let mut times = vec![s.t_start, s.t_end];
            for ax in 0..3 {
                if self.accel[ax] != 0.0 {
                    let tv = s.t_start - s.v0[ax] / self.accel[ax];
                    if tv > s.t_start && tv < s.t_end {
                        times.push(tv);
                    }
                }
            }
            for t in times {
                let r = self.position_in(n, t);
                lo = lo.inf(&r);
                hi = hi.sup(&r);
            }
        }
        (lo, hi)
    }
}

/// Exact unperturbed path of `branch`: free fall between pulses, velocity
/// jumps of `ħk/m` at pulse times.
pub fn unperturbed_trajectory(seq: &PulseSequence, branch: Branch) -> Result<BranchTrajectory> {
    seq.validate()?;
    let accel = seq.g_vec;
    let bps = seq.breakpoints();
    let recoil = |k: &Vec3| k * (seq.hbar / seq.mass);

    let mut r = seq.r_mean0;
    let mut v = seq.v_mean0;
    let mut pulses = seq.pulses.iter().peekable();
    let mut segments = Vec::with_capacity(bps.len() - 1);
    for w in bps.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        while let Some(p) = pulses.peek() {
            if p.time <= ta {
                v += recoil(p.kick(branch));
                pulses.next();
            } else {
                break;
            }
        }
        segments.push(Segment {
            t_start: ta,
            t_end: tb,
            r0: r,
            v0: v,
        });
        let tau = tb - ta;
        r += v * tau + accel * (0.5 * tau * tau);
        v += accel * tau;
    }
    for p in pulses {
        v += recoil(p.kick(branch));
    }
    Ok(BranchTrajectory {
        branch,
        accel,
        segments,
        v_final: v,
        v_initial: seq.v_mean0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MachZehnder;

    fn mz(k: f64, g: f64) -> PulseSequence {
        MachZehnder::new(1.0, k, 1.0, g, 1.0).build().unwrap()
    }

    #[test]
    fn mach_zehnder_branches_match_closed_forms() {
        let (vr, g) = (3.0, 9.81);
        let seq = mz(vr, g);
        let up = unperturbed_trajectory(&seq, Branch::Upper).unwrap();
        let lo = unperturbed_trajectory(&seq, Branch::Lower).unwrap();
        for i in 0..=20 {
            let t = i as f64 * 0.05;
            assert!((up.position(t).unwrap().z - (vr * t - 0.5 * g * t * t)).abs() < 1e-13);
            assert!((lo.position(t).unwrap().z - (-0.5 * g * t * t)).abs() < 1e-13);
        }
        for i in 0..=20 {
            let t = 1.0 + i as f64 * 0.05;
            assert!((up.position(t).unwrap().z - (vr - 0.5 * g * t * t)).abs() < 1e-12);
            assert!((lo.position(t).unwrap().z - (-0.5 * g * t * t + vr * (t - 1.0))).abs() < 1e-12);
        }
    }

    #[test]
    fn free_particle_without_kicks_or_gravity() {
        let r0 = Vec3::new(0.1, -0.2, 0.3);
        let v0 = Vec3::new(1.0, 0.5, -0.25);
        let seq = MachZehnder::new(1.0, 0.0, 1.0, 0.0, 1.0)
            .with_initial(r0, v0)
            .build()
            .unwrap();
        for b in Branch::BOTH {
            let tr = unperturbed_trajectory(&seq, b).unwrap();
            for i in 0..=10 {
                let t = 0.2 * i as f64;
                assert!((tr.position(t).unwrap() - (r0 + v0 * t)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn kicks_jump_velocity_and_keep_position_continuous() {
        let seq = mz(2.0, 1.0);
        let up = unperturbed_trajectory(&seq, Branch::Upper).unwrap();
        assert_eq!(up.v_initial, Vec3::zeros());
        let before = up.velocity_in(0, 1.0);
        let after = up.velocity(1.0).unwrap();
        assert!((before - after - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-14);
        let left = up.position_in(0, 1.0);
        let right = up.position_in(1, 1.0);
        assert!((left - right).norm() < 1e-14);
    }

    #[test]
    fn final_velocity_includes_kick_at_detection() {
        let seq = mz(2.0, 1.0);
        let lo = unperturbed_trajectory(&seq, Branch::Lower).unwrap();
        assert!((lo.v_final.z - (-2.0)).abs() < 1e-14);
        assert_eq!(lo.velocity(2.0).unwrap(), lo.v_final);
    }

    #[test]
    fn outside_window_is_an_error() {
        let tr = unperturbed_trajectory(&mz(1.0, 1.0), Branch::Upper).unwrap();
        assert!(matches!(tr.position(2.5), Err(Error::TimeOutOfRange { .. })));
        assert!(tr.position(-0.1).is_err());
    }

    #[test]
    fn bounding_box_includes_apex() {
        let tr = unperturbed_trajectory(&mz(10.0, 10.0), Branch::Upper).unwrap();
        let (lo, hi) = tr.bounding_box();
        // apex of 10 t - 5 t^2 at t = 1
        assert!((hi.z - 5.0).abs() < 1e-12);
        assert!((lo.z - (10.0 - 20.0)).abs() < 1e-12);
    }
}
