//! Gaussian wave packets described by their phase-space mean and central
//! covariance at `t_i`.

use nalgebra::{Matrix6, SymmetricEigen};

use crate::tensor::{mat_asymmetry, Mat3, Vec3};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    pub mean_r: Vec3,
    pub mean_p: Vec3,
    /// `⟨δr_i δr_j⟩` [m²]
    pub sigma_rr: Mat3,
    /// `⟨{δr_i, δp_j}⟩ / 2` [m kg m/s]
    pub sigma_rp: Mat3,
    /// `⟨δp_i δp_j⟩` [(kg m/s)²]
    pub sigma_pp: Mat3,
    pub mass: f64,
    pub hbar: f64,
}

impl GaussianState {
    pub fn new(
        mean_r: Vec3,
        mean_p: Vec3,
        sigma_rr: Mat3,
        sigma_rp: Mat3,
        sigma_pp: Mat3,
        mass: f64,
        hbar: f64,
    ) -> Result<Self> {
        let s = Self {
            mean_r,
            mean_p,
            sigma_rr,
            sigma_rp,
            sigma_pp,
            mass,
            hbar,
        };
        s.validate()?;
        Ok(s)
    }

    /// Ground state of an anisotropic harmonic trap, centred at the origin.
    pub fn trap_ground_state(omega: [f64; 3], mass: f64, hbar: f64) -> Result<Self> {
        if let Some(w) = omega.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::invalid(format!("trap frequencies must be positive, got {w}")));
        }
        let rr = Mat3::from_diagonal(&Vec3::from_fn(|i, _| hbar / (2.0 * mass * omega[i])));
        let pp = Mat3::from_diagonal(&Vec3::from_fn(|i, _| hbar * mass * omega[i] / 2.0));
        Self::new(Vec3::zeros(), Vec3::zeros(), rr, Mat3::zeros(), pp, mass, hbar)
    }

    /// Uncorrelated minimum-uncertainty packet with position widths `sigma`.
    pub fn minimum_uncertainty(sigma: [f64; 3], mass: f64, hbar: f64) -> Result<Self> {
        if let Some(s) = sigma.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::invalid(format!("widths must be positive, got {s}")));
        }
        let rr = Mat3::from_diagonal(&Vec3::from_fn(|i, _| sigma[i] * sigma[i]));
        let pp = Mat3::from_diagonal(&Vec3::from_fn(|i, _| hbar * hbar / (4.0 * sigma[i] * sigma[i])));
        Self::new(Vec3::zeros(), Vec3::zeros(), rr, Mat3::zeros(), pp, mass, hbar)
    }

    pub fn with_mean(mut self, r: Vec3, p: Vec3) -> Self {
        self.mean_r = r;
        self.mean_p = p;
        self
    }

    /// Position spread scaled by `f` and momentum spread by `1/f`, which keeps
    /// a pure state pure.
    pub fn widened(&self, f: f64) -> Result<Self> {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::invalid(format!("widening factor must be positive, got {f}")));
        }
        let mut s = self.clone();
        s.sigma_rr *= f * f;
        s.sigma_pp /= f * f;
        Ok(s)
    }

    pub fn covariance6(&self) -> Matrix6<f64> {
        let mut c = Matrix6::zeros();
        c.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.sigma_rr);
        c.fixed_view_mut::<3, 3>(0, 3).copy_from(&self.sigma_rp);
        c.fixed_view_mut::<3, 3>(3, 0).copy_from(&self.sigma_rp.transpose());
        c.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.sigma_pp);
        c
    }

    /// `Σrr_jj Σpp_jj - Σrp_jj²` per axis.
    pub fn uncertainty_products(&self) -> [f64; 3] {
        std::array::from_fn(|j| {
            self.sigma_rr[(j, j)] * self.sigma_pp[(j, j)] - self.sigma_rp[(j, j)] * self.sigma_rp[(j, j)]
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite() && self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::invalid("state needs positive mass and hbar"));
        }
        let c = self.covariance6();
        if c.iter().any(|x| !x.is_finite())
            || self.mean_r.iter().chain(self.mean_p.iter()).any(|x| !x.is_finite())
        {
            return Err(Error::invalid("state moments must be finite"));
        }
        for (m, name) in [(&self.sigma_rr, "position"), (&self.sigma_pp, "momentum")] {
            if mat_asymmetry(m) > 1e-12 * m.abs().max() {
                return Err(Error::invalid(format!("{name} covariance is not symmetric")));
            }
        }
        // PSD in units where positions and momenta have comparable size
        let scale = Vec3::from_fn(|i, _| self.sigma_rr[(i, i)].sqrt().max(f64::MIN_POSITIVE));
        let d = Matrix6::from_diagonal(&nalgebra::Vector6::from_fn(|i, _| {
            if i < 3 {
                1.0 / scale[i]
            } else {
                scale[i - 3] / self.hbar
            }
        }));
        let scaled = d * c * d;
        let eig = SymmetricEigen::new(scaled);
        let min = eig.eigenvalues.min();
        let max = eig.eigenvalues.max();
        if min < -1e-10 * max.max(1.0) {
            return Err(Error::invalid(format!(
                "covariance is not positive semidefinite (smallest scaled eigenvalue {min:e})"
            )));
        }
        let bound = 0.25 * self.hbar * self.hbar;
        for (j, u) in self.uncertainty_products().iter().enumerate() {
            if *u < bound * (1.0 - 1e-9) {
                return Err(Error::invalid(format!(
                    "axis {j} violates the uncertainty relation: {u:e} < hbar^2/4 = {bound:e}"
                )));
            }
        }
        Ok(())
    }

    /// `⟨r̄_i(t) r̄_j(t)⟩` for free evolution from `t_i`, with `t` measured
    /// from `t_i`.
    pub fn covariance_at(&self, t: f64) -> Mat3 {
        let m = self.mass;
        self.sigma_rr + (self.sigma_rp + self.sigma_rp.transpose()) * (t / m) + self.sigma_pp * (t * t / (m * m))
    }

    /// Symmetric part `G_ij(t, t')` of `⟨r̄_i(t) r̄_j(t')⟩` and the commutator
    /// coefficient `c` with `⟨r̄_i(t) r̄_j(t')⟩ = G_ij + i c δ_ij`.
    pub fn two_time_moment(&self, t: f64, tp: f64) -> (Mat3, f64) {
        let m = self.mass;
        let g = self.sigma_rr
            + (self.sigma_rp * tp + self.sigma_rp.transpose() * t) / m
            + self.sigma_pp * (t * tp / (m * m));
        (g, self.hbar * (tp - t) / (2.0 * m))
    }

    /// Largest single-axis width at time `t`.
    pub fn width_at(&self, t: f64) -> f64 {
        let c = self.covariance_at(t);
        (0..3).map(|j| c[(j, j)].max(0.0).sqrt()).fold(0.0, f64::max)
    }

    /// Position width, momentum width and correlation along one axis.
    pub fn axis_moments(&self, axis: usize) -> (f64, f64, f64) {
        (
            self.sigma_rr[(axis, axis)],
            self.sigma_rp[(axis, axis)],
            self.sigma_pp[(axis, axis)],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{HBAR, RB87_MASS};
    use std::f64::consts::PI;

    #[test]
    fn rubidium_trap_width() {
        let w = 2.0 * PI * 60.0;
        let s = GaussianState::trap_ground_state([w; 3], RB87_MASS, HBAR).unwrap();
        // ħ / (2 m ω) = 1.0546e-34 / (2 * 1.4432e-25 * 376.99)
        assert!((s.sigma_rr[(0, 0)] - 9.692e-13).abs() < 1e-15);
        for u in s.uncertainty_products() {
            assert!((u - HBAR * HBAR / 4.0).abs() < 1e-12 * u);
        }
    }

    #[test]
    fn rejects_bad_frequencies_and_sub_minimal_states() {
        assert!(GaussianState::trap_ground_state([1.0, 0.0, 1.0], 1.0, 1.0).is_err());
        let rr = Mat3::identity();
        let pp = Mat3::identity() * 0.2;
        assert!(GaussianState::new(Vec3::zeros(), Vec3::zeros(), rr, Mat3::zeros(), pp, 1.0, 1.0).is_err());
        let pp = Mat3::identity() * 0.25;
        assert!(GaussianState::new(Vec3::zeros(), Vec3::zeros(), rr, Mat3::zeros(), pp, 1.0, 1.0).is_ok());
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let rr = Mat3::identity();
        let pp = Mat3::identity();
        let rp = Mat3::identity() * 0.9;
        let mut rp_bad = rp;
        rp_bad[(0, 1)] = 2.0;
        assert!(GaussianState::new(Vec3::zeros(), Vec3::zeros(), rr, rp_bad, pp, 1.0, 1.0).is_err());
    }

    #[test]
    fn covariance_and_two_time_moments() {
        let s = GaussianState::minimum_uncertainty([0.5, 1.0, 2.0], 2.0, 1.0).unwrap();
        assert_eq!(s.covariance_at(0.0), s.sigma_rr);
        let t = 1.7;
        let c = s.covariance_at(t);
        for j in 0..3 {
            let want = s.sigma_rr[(j, j)] + s.sigma_pp[(j, j)] * t * t / 4.0;
            assert!((c[(j, j)] - want).abs() < 1e-14);
        }
        let (g, k) = s.two_time_moment(t, t);
        assert_eq!(g, c);
        assert_eq!(k, 0.0);
        let (g1, k1) = s.two_time_moment(0.3, 1.1);
        let (g2, k2) = s.two_time_moment(1.1, 0.3);
        assert!((g1 - g2).norm() < 1e-15);
        assert_eq!(k1, -k2);
        assert!((k1 - 0.8 / 4.0).abs() < 1e-15);
        let want = 0.25 + s.sigma_pp[(0, 0)] * 0.3 * 1.1 / 4.0;
        assert!((g1[(0, 0)] - want).abs() < 1e-15);
    }

    #[test]
    fn correlated_two_time_moment_matches_operator_expansion() {
        // r(t) = r + p t / m with symmetric ordering, checked component-wise
        let rr = Mat3::new(2.0, 0.1, 0.0, 0.1, 1.0, 0.2, 0.0, 0.2, 1.5);
        let rp = Mat3::new(0.3, 0.05, 0.0, -0.02, -0.1, 0.0, 0.0, 0.01, 0.2);
        let pp = Mat3::new(1.0, 0.0, 0.1, 0.0, 2.0, 0.0, 0.1, 0.0, 1.0);
        let s = GaussianState::new(Vec3::zeros(), Vec3::zeros(), rr, rp, pp, 1.5, 0.1).unwrap();
        let (t, tp) = (0.4, 1.3);
        let (g, _) = s.two_time_moment(t, tp);
        for i in 0..3 {
            for j in 0..3 {
                let want = rr[(i, j)] + rp[(i, j)] * tp / 1.5 + rp[(j, i)] * t / 1.5 + pp[(i, j)] * t * tp / 2.25;
                assert!((g[(i, j)] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ballistic_expansion_limit() {
        let w = 10.0;
        let s = GaussianState::trap_ground_state([w; 3], 1.0, 1.0).unwrap();
        let t = 1e3;
        let c = s.covariance_at(t);
        assert!((c[(0, 0)] / (w * t * t / 2.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn widening_keeps_purity() {
        let s = GaussianState::minimum_uncertainty([1.0; 3], 1.0, 1.0).unwrap();
        let w = s.widened(10.0).unwrap();
        assert!((w.sigma_rr[(2, 2)] - 100.0).abs() < 1e-12);
        assert!((w.sigma_pp[(2, 2)] - 0.0025).abs() < 1e-15);
        assert!(w.validate().is_ok());
    }
}
