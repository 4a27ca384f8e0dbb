use std::sync::Arc;

use aiphase_core::engine::{contrast, phase_first_order, phase_second_order, phase_variance};
use aiphase_core::model::{closure_check, contour_integrate, MachZehnder, QuadOptions};
use aiphase_core::potentials::{FnPotential, PolyCoeffs, PolynomialPotential, Potential, Sum};
use aiphase_core::states::GaussianState;
use aiphase_core::{Mat3, PulseSequence, Vec3};
use proptest::prelude::*;

fn seq_strategy() -> impl Strategy<Value = PulseSequence> {
    (0.2f64..2.0, 0.5f64..5.0, 0.5f64..3.0, -2.0f64..2.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(t, k, m, g, z0, v0)| {
        MachZehnder::new(t, k, m, g, 1.0)
            .with_initial(Vec3::new(0.1, -0.2, z0), Vec3::new(0.0, 0.0, v0))
            .build()
            .unwrap()
    })
}

fn poly_strategy() -> impl Strategy<Value = PolyCoeffs> {
    (prop::array::uniform3(-1.0f64..1.0), prop::array::uniform6(-0.5f64..0.5), prop::array::uniform4(-0.2f64..0.2), -0.05f64..0.05)
        .prop_map(|(lin, q, cub, quart)| {
            let mut c = PolyCoeffs {
                linear: Vec3::from(lin),
                quadratic: Mat3::new(q[0], q[1], q[2], q[1], q[3], q[4], q[2], q[4], q[5]),
                ..Default::default()
            };
            c.cubic.set_symmetric(2, 2, 2, cub[0]);
            c.cubic.set_symmetric(0, 1, 2, cub[1]);
            c.cubic.set_symmetric(0, 0, 2, cub[2]);
            c.cubic.set_symmetric(1, 2, 2, cub[3]);
            c.quartic.set_symmetric(2, 2, 2, 2, quart);
            c
        })
}

/// Pure or mixed correlated Gaussian satisfying the uncertainty bound per axis.
fn state_strategy(mass: f64) -> impl Strategy<Value = GaussianState> {
    (prop::array::uniform3(0.1f64..2.0), prop::array::uniform3(-1.0f64..1.0), prop::array::uniform3(1.0f64..3.0)).prop_map(
        move |(s, c, mix)| {
            let hbar = 1.0;
            let rr = Mat3::from_diagonal(&Vec3::from_fn(|i, _| s[i] * s[i]));
            let rp = Mat3::from_diagonal(&Vec3::from_fn(|i, _| c[i] * hbar));
            let pp = Mat3::from_diagonal(&Vec3::from_fn(|i, _| mix[i] * (0.25 * hbar * hbar + (c[i] * hbar).powi(2)) / (s[i] * s[i])));
            GaussianState::new(Vec3::zeros(), Vec3::zeros(), rr, rp, pp, mass, hbar).unwrap()
        },
    )
}

fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn mz_closes_exactly(seq in seq_strategy()) {
        let rep = closure_check(&seq).unwrap();
        prop_assert!(rep.closed, "{:?}", rep);
    }

    #[test]
    fn loop_cancels_branch_independent_time_functions(seq in seq_strategy(), a in -3.0f64..3.0, w in 0.1f64..5.0) {
        let r = contour_integrate(|p| Ok(a * (w * p.t).sin() + p.t * p.t), &seq, &QuadOptions::default()).unwrap();
        prop_assert!(r.value.abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn constant_and_time_only_shifts_change_nothing(
        seq in seq_strategy(), c in poly_strategy(), shift in -10.0f64..10.0, w in 0.1f64..3.0,
    ) {
        let st = GaussianState::minimum_uncertainty([0.4, 0.5, 0.6], seq.mass, 1.0).unwrap();
        let q = QuadOptions::default();
        let base = PolynomialPotential::new(c.clone()).unwrap();
        let mut cs = c;
        cs.constant += shift;
        let shifted: Arc<dyn Potential> = Arc::new(PolynomialPotential::new(cs).unwrap());
        let time_only: Arc<dyn Potential> = Arc::new(
            FnPotential::new(move |_, t, _| shift * (w * t).cos(), 1.0).branch_independent(),
        );
        let gauged = Sum::new(vec![shifted, time_only]);
        let f0 = phase_first_order(&seq, &base, &st, &q).unwrap();
        let f1 = phase_first_order(&seq, &gauged, &st, &q).unwrap();
        let scale = shift.abs() * 2.0 * seq.duration() * 1e-12;
        prop_assert!(close(f0.classical, f1.classical, 1e-10, scale));
        prop_assert!(close(f0.wavepacket, f1.wavepacket, 1e-10, 1e-12));
        let s0 = phase_second_order(&seq, &base, &st, &q).unwrap();
        let s1 = phase_second_order(&seq, &gauged, &st, &q).unwrap();
        prop_assert!(close(s0.total(), s1.total(), 1e-8, 1e-12));
        let c0 = contrast(&seq, &base, &st, &q).unwrap();
        let c1 = contrast(&seq, &gauged, &st, &q).unwrap();
        prop_assert!(close(c0, c1, 1e-10, 0.0));
    }

    #[test]
    fn orders_scale_homogeneously(seq in seq_strategy(), c in poly_strategy(), lambda in 0.1f64..5.0) {
        let st = GaussianState::minimum_uncertainty([0.4, 0.5, 0.6], seq.mass, 1.0).unwrap();
        let q = QuadOptions::default();
        let v = PolynomialPotential::new(c.clone()).unwrap();
        let lv = PolynomialPotential::new(c.scale(lambda)).unwrap();
        let f0 = phase_first_order(&seq, &v, &st, &q).unwrap();
        let f1 = phase_first_order(&seq, &lv, &st, &q).unwrap();
        prop_assert!(close(f1.classical, lambda * f0.classical, 1e-11, 1e-13));
        prop_assert!(close(f1.wavepacket, lambda * f0.wavepacket, 1e-11, 1e-13));
        let s0 = phase_second_order(&seq, &v, &st, &q).unwrap();
        let s1 = phase_second_order(&seq, &lv, &st, &q).unwrap();
        prop_assert!(close(s1.total(), lambda * lambda * s0.total(), 1e-10, 1e-13));
        let v0 = phase_variance(&seq, &v, &st, &q).unwrap();
        let v1 = phase_variance(&seq, &lv, &st, &q).unwrap();
        prop_assert!(close(v1, lambda * lambda * v0, 1e-10, 1e-14));
    }

    #[test]
    fn contrast_never_exceeds_one(seq in seq_strategy(), c in poly_strategy(), st in state_strategy(1.0)) {
        let mut st = st;
        st.mass = seq.mass;
        let pot = PolynomialPotential::new(c).unwrap();
        let q = QuadOptions::default();
        prop_assert!(phase_variance(&seq, &pot, &st, &q).unwrap() >= -1e-15);
        let cval = contrast(&seq, &pot, &st, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&cval), "{cval}");
    }

    #[test]
    fn evolved_covariance_stays_physical(st in state_strategy(1.3), t in 0.0f64..10.0) {
        let g = st.covariance_at(t);
        let eig = g.symmetric_eigen().eigenvalues;
        prop_assert!(eig.min() >= -1e-12 * eig.max().abs().max(1.0));
        prop_assert!((g - g.transpose()).norm() <= 1e-12 * g.norm());
        for p in st.uncertainty_products() {
            prop_assert!(p >= 0.25 * (1.0 - 1e-9));
        }
        let full = st.covariance6().symmetric_eigen().eigenvalues;
        prop_assert!(full.min() >= -1e-12 * full.max());
    }
}
