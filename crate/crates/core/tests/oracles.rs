use aiphase_core::engine::{phase_total, PhaseOptions};
use aiphase_core::model::{closure_check, unperturbed_phase_difference, MachZehnder};
use aiphase_core::oracles::{classical_oracle, quantum_oracle_1d, wrap_near, ClassicalOptions, InitialWave, QuantumOptions};
use aiphase_core::potentials::{PolynomialPotential, ZeroPotential};
use aiphase_core::states::GaussianState;

fn qopts() -> QuantumOptions {
    QuantumOptions {
        grid_points: 1 << 13,
        steps_per_segment: 400,
        ..Default::default()
    }
}

#[test]
fn open_interferometer_separation_phase() {
    for (delta, g) in [(0.01, 0.0), (-0.02, 0.5), (0.015, 1.0)] {
        let mut seq = MachZehnder::new(1.0, 10.0, 1.0, g, 1.0)
            .with_laser_phases([0.2, -0.1, 0.05])
            .build()
            .unwrap();
        seq.pulses[1].time += delta;
        assert!(!closure_check(&seq).unwrap().closed);
        let st = GaussianState::minimum_uncertainty([1.0; 3], 1.0, 1.0).unwrap();
        let q = quantum_oracle_1d(&seq, &ZeroPotential, &InitialWave::Gaussian(st), &qopts()).unwrap();
        let want = unperturbed_phase_difference(&seq).unwrap();
        let got = wrap_near(q.phase, want);
        assert!((got - want).abs() < 1e-6, "delta {delta}: quantum {got} vs {want}");
        assert!(q.contrast < 1.0);
    }
}

#[test]
fn desk_cubic_engine_against_both_oracles() {
    let lambda = 3e-6;
    let seq = MachZehnder::new(1.0, 10.0, 1.0, 0.0, 1.0).build().unwrap();
    let pot = PolynomialPotential::monomial_z(lambda, 3).unwrap();
    for widen in [1.0, 10.0] {
        let st = GaussianState::minimum_uncertainty([1.0; 3], 1.0, 1.0).unwrap().widened(widen).unwrap();
        let opts = PhaseOptions {
            override_validity: true,
            ..Default::default()
        };
        let b = phase_total(&seq, &pot, &st, &opts).unwrap();
        let q = quantum_oracle_1d(&seq, &pot, &InitialWave::Gaussian(st.clone()), &qopts()).unwrap();
        let c = classical_oracle(&seq, &pot, &ClassicalOptions::default()).unwrap();
        let qp = wrap_near(q.phase, b.total);
        assert!((c.correction - b.phi1_classical - b.phi2_classical).abs() < 1e-6 * c.correction.abs());
        assert!((qp - b.total).abs() <= 1e-3 * b.total.abs());
        assert!((q.contrast - b.contrast).abs() <= 1e-3);
        if widen > 1.0 {
            assert!(b.phi1_wavepacket.abs() > b.phi1_classical.abs());
        }
    }
}

#[test]
fn quadratic_hamiltonian_oracles_agree() {
    // branch-independent quadratic perturbation: the full Hamiltonian stays
    // quadratic, so the classical action is exact
    let seq = MachZehnder::new(1.0, 10.0, 1.0, 0.5, 1.0).build().unwrap();
    let pot = PolynomialPotential::monomial_z(2e-3, 2).unwrap();
    let st = GaussianState::minimum_uncertainty([1.0; 3], 1.0, 1.0).unwrap();
    let c = classical_oracle(&seq, &pot, &ClassicalOptions::default()).unwrap();
    let q = quantum_oracle_1d(&seq, &pot, &InitialWave::Gaussian(st), &qopts()).unwrap();
    let qp = wrap_near(q.phase, c.phase);
    assert!((qp - c.phase).abs() < 1e-6, "quantum {qp} classical {}", c.phase);
    assert!(q.diagnostics.norm_drift.unwrap() < 1e-10);
    assert!(q.diagnostics.convergence_metric < 1e-6);
}

#[test]
fn oracle_gap_tracks_wavepacket_term() {
    let seq = MachZehnder::new(1.0, 10.0, 1.0, 0.0, 1.0).build().unwrap();
    let st = GaussianState::minimum_uncertainty([1.0; 3], 1.0, 1.0).unwrap().widened(6.0).unwrap();
    let opts = PhaseOptions {
        override_validity: true,
        ..Default::default()
    };
    let mut gap = Vec::new();
    let mut wp = Vec::new();
    for lambda in [5e-7, 1e-6, 2e-6, 3e-6, 4e-6] {
        let pot = PolynomialPotential::monomial_z(lambda, 3).unwrap();
        let b = phase_total(&seq, &pot, &st, &opts).unwrap();
        let c = classical_oracle(&seq, &pot, &ClassicalOptions::default()).unwrap();
        let q = quantum_oracle_1d(&seq, &pot, &InitialWave::Gaussian(st.clone()), &qopts()).unwrap();
        gap.push(wrap_near(q.phase, c.phase) - c.phase);
        wp.push(b.phi1_wavepacket);
    }
    let n = gap.len() as f64;
    let (mx, my) = (gap.iter().sum::<f64>() / n, wp.iter().sum::<f64>() / n);
    let cov: f64 = gap.iter().zip(&wp).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = gap.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = wp.iter().map(|y| (y - my).powi(2)).sum();
    let r = cov / (vx * vy).sqrt();
    assert!(r > 0.99, "correlation {r}");
}
