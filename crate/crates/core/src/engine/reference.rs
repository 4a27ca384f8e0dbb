use serde::Serialize;

/// Closed forms for the Mach–Zehnder gravimeter in a cubic Earth potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MzCubicReference {
    /// `∮ z0³ dt`
    pub f_phi: f64,
    /// `∮ z0 dt`
    pub f_rr: f64,
    /// `∮ z0 t dt`
    pub f_rp: f64,
    /// `∮ z0 t² dt`
    pub f_pp: f64,
    /// Phase correction for a trap ground state with `ω_x = ω_y = 2 ω_z = ω`,
    /// released at rest from `z_i`.
    pub phase_correction: f64,
    /// Its classical part, `-(g/R²)(m/ħ) f_phi`.
    pub classical: f64,
    /// Its wave-packet part.
    pub wavepacket: f64,
}

/// `v_r = ħk/m`, pulses at `0, T, 2T`, no initial velocity.
#[allow(clippy::too_many_arguments)]
pub fn mz_cubic_reference(t: f64, v_r: f64, g: f64, z_i: f64, omega: f64, radius: f64, mass: f64, hbar: f64) -> MzCubicReference {
    let (t2, t3, t4) = (t * t, t * t * t, t.powi(4));
    let f_phi = 31.0 * g * g * v_r * t.powi(6) / 20.0 - v_r * g * t4 * (14.0 * z_i + 9.0 * v_r * t) / 4.0
        + v_r * t2 * (v_r * v_r * t2 + 3.0 * v_r * t * z_i + 3.0 * z_i * z_i);
    let f_rr = v_r * t2;
    let f_rp = v_r * t3;
    let f_pp = 7.0 / 6.0 * v_r * t4;
    let pre = g / (radius * radius);
    let classical = -pre * mass / hbar * f_phi;
    let wavepacket = -pre * v_r * t2 / omega * (1.5 - 0.875 * (omega * t).powi(2));
    MzCubicReference {
        f_phi,
        f_rr,
        f_rp,
        f_pp,
        phase_correction: classical + wavepacket,
        classical,
        wavepacket,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coincident_branches_give_zero() {
        let r = mz_cubic_reference(1.3, 0.0, 9.81, 0.2, 10.0, 6.4e6, 1.0, 1.0);
        assert_eq!((r.f_phi, r.f_rr, r.f_rp, r.f_pp), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(r.phase_correction, 0.0);
    }

    #[test]
    fn f_phi_without_initial_height() {
        let (t, vr, g) = (1.1, 0.7, 3.0);
        let r = mz_cubic_reference(t, vr, g, 0.0, 1.0, 1.0, 1.0, 1.0);
        let want = 31.0 / 20.0 * g * g * vr * t.powi(6) - 9.0 / 4.0 * g * vr * vr * t.powi(5) + vr.powi(3) * t.powi(4);
        assert!((r.f_phi - want).abs() < 1e-12 * want.abs());
    }
}
