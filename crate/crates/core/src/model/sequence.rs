use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tensor::Vec3;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Upper,
    Lower,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Upper, Branch::Lower];

    /// Orientation of the branch on the contour: `+1` upper, `-1` lower.
    pub fn sign(self) -> f64 {
        match self {
            Branch::Upper => 1.0,
            Branch::Lower => -1.0,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::Upper => f.write_str("upper"),
            Branch::Lower => f.write_str("lower"),
        }
    }
}

/// An instantaneous laser pulse. A branch the pulse does not address carries
/// a zero wave vector and zero phase.
#[derive(Clone, Debug, PartialEq)]
pub struct Pulse {
    pub time: f64,
    pub k_upper: Vec3,
    pub k_lower: Vec3,
    pub phi_upper: f64,
    pub phi_lower: f64,
}

impl Pulse {
    pub fn kick(&self, branch: Branch) -> &Vec3 {
        match branch {
            Branch::Upper => &self.k_upper,
            Branch::Lower => &self.k_lower,
        }
    }

    pub fn laser_phase(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Upper => self.phi_upper,
            Branch::Lower => self.phi_lower,
        }
    }
}

/// Timing, kicks and constants of a light-pulse sequence.
///
/// The unperturbed Hamiltonian on each branch is `p²/2m - m g·r` plus the
/// laser kicks, so `g_vec` points along the gravitational acceleration
/// (`(0, 0, -g)` for a vertical fountain with `z` up).
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSequence {
    pub t_i: f64,
    pub t_d: f64,
    pub pulses: Vec<Pulse>,
    pub mass: f64,
    pub g_vec: Vec3,
    pub r_mean0: Vec3,
    pub v_mean0: Vec3,
    pub hbar: f64,
    /// Characteristic interferometer time; `(t_d - t_i) / 2` when unset.
    pub t_char: Option<f64>,
}

impl PulseSequence {
    pub fn validate(&self) -> Result<()> {
        let finite3 = |v: &Vec3| v.iter().all(|c| c.is_finite());
        if !(self.t_i.is_finite() && self.t_d.is_finite()) || self.t_d <= self.t_i {
            return Err(Error::invalid(format!(
                "need finite t_i < t_d, got t_i = {}, t_d = {}",
                self.t_i, self.t_d
            )));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::invalid(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::invalid(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(finite3(&self.g_vec) && finite3(&self.r_mean0) && finite3(&self.v_mean0)) {
            return Err(Error::invalid("non-finite gravity or initial mean"));
        }
        if let Some(tc) = self.t_char {
            if !(tc > 0.0 && tc.is_finite()) {
                return Err(Error::invalid(format!("characteristic time must be positive, got {tc}")));
            }
        }
        let mut prev: Option<f64> = None;
        for (n, p) in self.pulses.iter().enumerate() {
            if !(p.time.is_finite()
                && finite3(&p.k_upper)
                && finite3(&p.k_lower)
                && p.phi_upper.is_finite()
                && p.phi_lower.is_finite())
            {
                return Err(Error::invalid(format!("pulse {n} has non-finite fields")));
            }
            if p.time < self.t_i || p.time > self.t_d {
                return Err(Error::invalid(format!(
                    "pulse {n} at t = {} lies outside [t_i, t_d] = [{}, {}]",
                    p.time, self.t_i, self.t_d
                )));
            }
            if let Some(tp) = prev {
                if p.time <= tp {
                    return Err(Error::invalid(format!(
                        "pulse times must be strictly increasing (pulse {n} at {} after {tp})",
                        p.time
                    )));
                }
            }
            prev = Some(p.time);
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.t_d - self.t_i
    }

    pub fn characteristic_time(&self) -> f64 {
        self.t_char.unwrap_or(0.5 * self.duration())
    }

    /// Largest single-pulse velocity change `ħ|k|/m` over both branches.
    pub fn recoil_velocity(&self) -> f64 {
        self.pulses
            .iter()
            .flat_map(|p| [p.k_upper.norm(), p.k_lower.norm()])
            .fold(0.0, f64::max)
            * self.hbar
            / self.mass
    }

    /// `t_i`, every pulse time strictly inside `(t_i, t_d)`, and `t_d`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = vec![self.t_i];
        out.extend(
            self.pulses
                .iter()
                .map(|p| p.time)
                .filter(|&t| t > self.t_i && t < self.t_d),
        );
        out.push(self.t_d);
        out
    }
}

/// Mach–Zehnder gravimeter: pulses at `0`, `T`, `2T` along `+z`.
///
/// The upper branch takes `+k` at `0` and `-k` at `T`; the lower branch takes
/// `+k` at `T` and `-k` at `2T`. Laser phases `[φ1, φ2, φ3]` are imprinted
/// with the sign of the kick, so they enter the phase as `φ1 - 2φ2 + φ3`.
#[derive(Clone, Debug, PartialEq)]
pub struct MachZehnder {
    pub t: f64,
    pub k: f64,
    pub mass: f64,
    pub g: f64,
    pub hbar: f64,
    pub laser_phases: [f64; 3],
    pub r_mean0: Vec3,
    pub v_mean0: Vec3,
    pub t_d: Option<f64>,
}

impl MachZehnder {
    pub fn new(t: f64, k: f64, mass: f64, g: f64, hbar: f64) -> Self {
        Self {
            t,
            k,
            mass,
            g,
            hbar,
            laser_phases: [0.0; 3],
            r_mean0: Vec3::zeros(),
            v_mean0: Vec3::zeros(),
            t_d: None,
        }
    }

    pub fn with_laser_phases(mut self, phases: [f64; 3]) -> Self {
        self.laser_phases = phases;
        self
    }

    pub fn with_initial(mut self, r: Vec3, v: Vec3) -> Self {
        self.r_mean0 = r;
        self.v_mean0 = v;
        self
    }

    pub fn with_detection_time(mut self, t_d: f64) -> Self {
        self.t_d = Some(t_d);
        self
    }

    pub fn recoil_velocity(&self) -> f64 {
        self.hbar * self.k / self.mass
    }

    pub fn build(&self) -> Result<PulseSequence> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::invalid(format!(
                "Mach-Zehnder pulse separation must be positive, got {}",
                self.t
            )));
        }
        let t = self.t;
        let kz = Vec3::new(0.0, 0.0, self.k);
        let zero = Vec3::zeros();
        let [p1, p2, p3] = self.laser_phases;
        let pulses = vec![
            Pulse {
                time: 0.0,
                k_upper: kz,
                k_lower: zero,
                phi_upper: p1,
                phi_lower: 0.0,
            },
            Pulse {
                time: t,
                k_upper: -kz,
                k_lower: kz,
                phi_upper: -p2,
                phi_lower: p2,
            },
            Pulse {
                time: 2.0 * t,
                k_upper: zero,
                k_lower: -kz,
                phi_upper: 0.0,
                phi_lower: -p3,
            },
        ];
        let seq = PulseSequence {
            t_i: 0.0,
            t_d: self.t_d.unwrap_or(2.0 * t),
            pulses,
            mass: self.mass,
            g_vec: Vec3::new(0.0, 0.0, -self.g),
            r_mean0: self.r_mean0,
            v_mean0: self.v_mean0,
            hbar: self.hbar,
            t_char: None,
        };
        seq.validate()?;
        Ok(seq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{HBAR, RB87_MASS};

    #[test]
    fn mach_zehnder_layout() {
        let seq = MachZehnder::new(1.0, 2.0, 1.0, 9.81, 1.0).build().unwrap();
        let times: Vec<f64> = seq.pulses.iter().map(|p| p.time).collect();
        assert_eq!(times, vec![0.0, 1.0, 2.0]);
        assert_eq!(seq.t_d, 2.0);
        assert_eq!(seq.pulses[0].k_upper.z, 2.0);
        assert_eq!(seq.pulses[1].k_upper.z, -2.0);
        assert_eq!(seq.pulses[1].k_lower.z, 2.0);
        assert_eq!(seq.pulses[2].k_lower.z, -2.0);
        assert_eq!(seq.characteristic_time(), 1.0);
        assert_eq!(seq.breakpoints(), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn rejects_non_positive_separation() {
        assert!(MachZehnder::new(0.0, 1.0, 1.0, 1.0, 1.0).build().is_err());
        assert!(MachZehnder::new(-1.0, 1.0, 1.0, 1.0, 1.0).build().is_err());
    }

    #[test]
    fn rubidium_recoil_velocity() {
        let mz = MachZehnder::new(1.0, 1.61e7, RB87_MASS, 9.81, HBAR);
        let vr = mz.build().unwrap().recoil_velocity();
        // ħk/m = 1.0546e-34 * 1.61e7 / 1.4432e-25
        assert!((vr - 1.176_47e-2).abs() < 1e-5, "{vr}");
        assert_eq!(vr, mz.recoil_velocity());
    }

    #[test]
    fn validation_catches_bad_sequences() {
        let mut seq = MachZehnder::new(1.0, 1.0, 1.0, 1.0, 1.0).build().unwrap();
        seq.pulses[1].time = 0.0;
        assert!(seq.validate().is_err());

        let mut seq = MachZehnder::new(1.0, 1.0, 1.0, 1.0, 1.0).build().unwrap();
        seq.mass = 0.0;
        assert!(seq.validate().is_err());

        let mut seq = MachZehnder::new(1.0, 1.0, 1.0, 1.0, 1.0).build().unwrap();
        seq.t_d = 1.5;
        assert!(seq.validate().is_err());
    }

    #[test]
    fn detection_after_last_pulse_is_allowed() {
        let seq = MachZehnder::new(1.0, 1.0, 1.0, 1.0, 1.0)
            .with_detection_time(2.5)
            .build()
            .unwrap();
        assert_eq!(seq.breakpoints(), vec![0.0, 1.0, 2.0, 2.5]);
        assert_eq!(seq.characteristic_time(), 1.25);
    }
}
