//! One-dimensional split-operator propagation of each branch, with laser
//! pulses applied as the phase factors `exp(i (k z + φ))`.
//!
//! Each branch sees `H = p²/2m - m g_z z + V^(α)((x0(t), y0(t), z), t)` where
//! `x0, y0` follow the unperturbed transverse motion. The result is the
//! overlap `<ψ_l|ψ_u> = C e^{iφ}` at `t_d`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{OracleDiagnostics, OracleResult, Separation};
use crate::model::{separation_phase, unperturbed_trajectory, Branch, BranchTrajectory, PulseSequence};
use crate::potentials::Potential;
use crate::states::GaussianState;
use crate::tensor::Vec3;
use crate::{Error, Result};

/// Initial wave function along `z`.
#[derive(Clone)]
pub enum InitialWave {
    /// Pure Gaussian with the `z` moments of the state, centred on the
    /// sequence's initial mean position and velocity.
    Gaussian(GaussianState),
    /// Arbitrary `ψ(z)`; `width` sizes the grid padding.
    Custom {
        psi: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
        width: f64,
    },
}

impl fmt::Debug for InitialWave {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialWave::Gaussian(s) => f.debug_tuple("Gaussian").field(s).finish(),
            InitialWave::Custom { width, .. } => f.debug_struct("Custom").field("width", width).finish_non_exhaustive(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantumOptions {
    pub grid_points: usize,
    pub steps_per_segment: usize,
    /// Rerun with twice the points and half the step and compare phases.
    pub check_convergence: bool,
    pub convergence_tol: f64,
    pub leakage_tol: f64,
    pub norm_tol: f64,
    /// Fraction of the grid at each end watched for leakage.
    pub edge_fraction: f64,
}

impl Default for QuantumOptions {
    fn default() -> Self {
        Self {
            grid_points: 1 << 15,
            steps_per_segment: 1000,
            check_convergence: true,
            convergence_tol: 1e-6,
            leakage_tol: 1e-8,
            norm_tol: 1e-10,
            edge_fraction: 0.01,
        }
    }
}

#[derive(Clone, Debug)]
struct Grid {
    z0: f64,
    dx: f64,
    n: usize,
}

impl Grid {
    fn z(&self, i: usize) -> f64 {
        self.z0 + i as f64 * self.dx
    }

    fn k(&self, i: usize) -> f64 {
        let n = self.n as isize;
        let j = if (i as isize) < n / 2 { i as isize } else { i as isize - n };
        2.0 * PI * j as f64 / (self.n as f64 * self.dx)
    }

    fn k_max(&self) -> f64 {
        PI / self.dx
    }
}

fn initial_psi(wave: &InitialWave, seq: &PulseSequence, grid: &Grid) -> Result<Vec<Complex64>> {
    let mut psi: Vec<Complex64> = match wave {
        InitialWave::Gaussian(s) => {
            let (rr, rp, pp) = s.axis_moments(2);
            let hbar = seq.hbar;
            let purity = rr * pp - rp * rp;
            if (purity - 0.25 * hbar * hbar).abs() > 1e-9 * 0.25 * hbar * hbar {
                return Err(Error::invalid(format!(
                    "the z moments describe a mixed state (Σrr Σpp - Σrp² = {purity:e}, ħ²/4 = {:e}); \
                     the wave-function oracle needs a pure state",
                    0.25 * hbar * hbar
                )));
            }
            let a = Complex64::new(1.0 / (4.0 * rr), -rp / (2.0 * hbar * rr));
            let (zc, p0) = (seq.r_mean0.z, seq.mass * seq.v_mean0.z);
            (0..grid.n)
                .map(|i| {
                    let z = grid.z(i);
                    let dz = z - zc;
                    (-a * dz * dz + Complex64::new(0.0, p0 * z / hbar)).exp()
                })
                .collect()
        }
        InitialWave::Custom { psi, .. } => (0..grid.n).map(|i| psi(grid.z(i))).collect(),
    };
    let norm = norm2(&psi, grid.dx).sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::invalid("initial wave function has zero or non-finite norm on the grid"));
    }
    for c in &mut psi {
        *c /= norm;
    }
    Ok(psi)
}

fn norm2(psi: &[Complex64], dx: f64) -> f64 {
    psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * dx
}

fn edge_probability(psi: &[Complex64], dx: f64, fraction: f64) -> f64 {
    let m = ((psi.len() as f64 * fraction).ceil() as usize).max(1);
    let head: f64 = psi[..m].iter().map(|c| c.norm_sqr()).sum();
    let tail: f64 = psi[psi.len() - m..].iter().map(|c| c.norm_sqr()).sum();
    (head + tail) * dx
}

struct BranchRun {
    psi: Vec<Complex64>,
    norm_drift: f64,
    leakage: f64,
}

fn propagate(
    seq: &PulseSequence,
    pot: &dyn Potential,
    traj: &BranchTrajectory,
    grid: &Grid,
    psi0: Vec<Complex64>,
    steps: usize,
    opts: &QuantumOptions,
    fft: &(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
) -> Result<BranchRun> {
    let (m, hbar) = (seq.mass, seq.hbar);
    let gz = seq.g_vec.z;
    let branch = traj.branch;
    let n = grid.n;
    let mut psi = psi0;
    let norm0 = norm2(&psi, grid.dx);
    let mut leakage = 0.0f64;
    let (fwd, inv) = fft;
    let mut scratch = vec![Complex64::new(0.0, 0.0); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
    let zs: Vec<f64> = (0..n).map(|i| grid.z(i)).collect();
    let transverse_static = traj.segments.iter().all(|s| s.v0.x == 0.0 && s.v0.y == 0.0) && traj.accel.x == 0.0 && traj.accel.y == 0.0;
    let cache_potential = pot.is_static() && transverse_static;

    // U(z, t) on the grid
    let potential_at = |seg: usize, t: f64| -> Result<Vec<f64>> {
        let r0 = traj.position_in(seg, t);
        zs.iter()
            .map(|&z| {
                let v = pot.value(&Vec3::new(r0.x, r0.y, z), t, branch)?;
                if !v.is_finite() {
                    return Err(Error::NonFinite { branch, t });
                }
                Ok(-m * gz * z + v)
            })
            .collect()
    };
    let factor = |u: &[f64], dt: f64| -> Vec<Complex64> { u.iter().map(|&u| Complex64::from_polar(1.0, -u * dt / hbar)).collect() };
    let mut cached: Option<Vec<f64>> = None;

    let mut pulses = seq.pulses.iter().peekable();
    let kick = |psi: &mut [Complex64], p: &crate::model::Pulse| {
        let kz = p.kick(branch).z;
        let phi = p.laser_phase(branch);
        if kz != 0.0 || phi != 0.0 {
            for (c, &z) in psi.iter_mut().zip(&zs) {
                *c *= Complex64::from_polar(1.0, kz * z + phi);
            }
        }
    };
    for (seg, s) in traj.segments.iter().enumerate() {
        while let Some(p) = pulses.peek() {
            if p.time <= s.t_start {
                kick(&mut psi, p);
                pulses.next();
            } else {
                break;
            }
        }
        let dt = (s.t_end - s.t_start) / steps as f64;
        let kin: Vec<Complex64> = (0..n)
            .map(|i| {
                let k = grid.k(i);
                Complex64::from_polar(1.0 / n as f64, -hbar * k * k * dt / (2.0 * m))
            })
            .collect();
        let mut u_at = |t: f64| -> Result<Vec<f64>> {
            if cache_potential {
                if cached.is_none() {
                    cached = Some(potential_at(seg, t)?);
                }
                Ok(cached.clone().unwrap())
            } else {
                potential_at(seg, t)
            }
        };
        let u0 = u_at(s.t_start)?;
        let half = factor(&u0, 0.5 * dt);
        let full_static = cache_potential.then(|| factor(&u0, dt));
        for (c, f) in psi.iter_mut().zip(&half) {
            *c *= f;
        }
        for step in 0..steps {
            fwd.process_with_scratch(&mut psi, &mut scratch);
            for (c, f) in psi.iter_mut().zip(&kin) {
                *c *= f;
            }
            inv.process_with_scratch(&mut psi, &mut scratch);
            let t_next = s.t_start + (step + 1) as f64 * dt;
            let last = step + 1 == steps;
            let f = match (&full_static, last) {
                (_, true) => factor(&u_at(s.t_end)?, 0.5 * dt),
                (Some(f), false) => f.clone(),
                (None, false) => factor(&u_at(t_next)?, dt),
            };
            for (c, f) in psi.iter_mut().zip(&f) {
                *c *= f;
            }
        }
        leakage = leakage.max(edge_probability(&psi, grid.dx, opts.edge_fraction));
    }
    for p in pulses {
        kick(&mut psi, p);
    }
    leakage = leakage.max(edge_probability(&psi, grid.dx, opts.edge_fraction));
    let norm_drift = (norm2(&psi, grid.dx) / norm0 - 1.0).abs();
    Ok(BranchRun { psi, norm_drift, leakage })
}

struct Outcome {
    overlap: Complex64,
    norm_drift: f64,
    leakage: f64,
    grid: Grid,
    dt: f64,
}

fn layout(seq: &PulseSequence, wave: &InitialWave, points: usize) -> Result<Grid> {
    let up = unperturbed_trajectory(seq, Branch::Upper)?;
    let lo = unperturbed_trajectory(seq, Branch::Lower)?;
    let (a_lo, a_hi) = up.bounding_box();
    let (b_lo, b_hi) = lo.bounding_box();
    let (zmin, zmax) = (a_lo.z.min(b_lo.z), a_hi.z.max(b_hi.z));
    let width = match wave {
        InitialWave::Gaussian(s) => {
            let dur = seq.duration();
            let c0 = s.covariance_at(0.0)[(2, 2)];
            let c1 = s.covariance_at(dur)[(2, 2)];
            c0.max(c1).sqrt()
        }
        InitialWave::Custom { width, .. } => *width,
    };
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::invalid("wave-packet width must be positive"));
    }
    let pad = (10.0 * width).max(0.25 * (zmax - zmin));
    let (z0, z1) = (zmin - pad, zmax + pad);
    Ok(Grid {
        z0,
        dx: (z1 - z0) / points as f64,
        n: points,
    })
}

fn simulate(
    seq: &PulseSequence,
    pot: &dyn Potential,
    wave: &InitialWave,
    points: usize,
    steps: usize,
    opts: &QuantumOptions,
) -> Result<Outcome> {
    let grid = layout(seq, wave, points)?;
    // momentum content: kicks, fall and packet spread must fit the grid
    let p_spread = match wave {
        InitialWave::Gaussian(s) => s.sigma_pp[(2, 2)].sqrt() / seq.hbar,
        InitialWave::Custom { width, .. } => 1.0 / width,
    };
    let kick_total: f64 = seq.pulses.iter().map(|p| p.k_upper.z.abs().max(p.k_lower.z.abs())).sum();
    let k_need = (seq.mass * (seq.v_mean0.z.abs() + seq.g_vec.z.abs() * seq.duration()) / seq.hbar) + kick_total + 10.0 * p_spread;
    if k_need > 0.8 * grid.k_max() {
        return Err(Error::InsufficientGrid(format!(
            "momentum range up to {k_need:.3e} rad/m needs more than {} points (grid reaches {:.3e})",
            points,
            grid.k_max()
        )));
    }
    let psi0 = initial_psi(wave, seq, &grid)?;
    let mut planner = FftPlanner::<f64>::new();
    let fft = (planner.plan_fft_forward(points), planner.plan_fft_inverse(points));
    let up = unperturbed_trajectory(seq, Branch::Upper)?;
    let lo = unperturbed_trajectory(seq, Branch::Lower)?;
    let (ru, rl) = std::thread::scope(|sc| {
        let hu = sc.spawn(|| propagate(seq, pot, &up, &grid, psi0.clone(), steps, opts, &fft));
        let rl = propagate(seq, pot, &lo, &grid, psi0.clone(), steps, opts, &fft);
        (hu.join().expect("upper branch propagation panicked"), rl)
    });
    let (ru, rl) = (ru?, rl?);
    let overlap: Complex64 = ru.psi.iter().zip(&rl.psi).map(|(u, l)| l.conj() * u).sum::<Complex64>() * grid.dx;
    let min_seg = seq
        .breakpoints()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        overlap,
        norm_drift: ru.norm_drift.max(rl.norm_drift),
        leakage: ru.leakage.max(rl.leakage),
        grid,
        dt: min_seg / steps as f64,
    })
}

/// Wraps `phase` onto the branch nearest `reference`.
pub fn wrap_near(phase: f64, reference: f64) -> f64 {
    phase + 2.0 * PI * ((reference - phase) / (2.0 * PI)).round()
}

/// `C = |<ψ_l|ψ_u>|` and `φ = arg <ψ_l|ψ_u>` by split-step propagation.
pub fn quantum_oracle_1d(
    seq: &PulseSequence,
    pot: &dyn Potential,
    wave: &InitialWave,
    opts: &QuantumOptions,
) -> Result<OracleResult> {
    seq.validate()?;
    if opts.grid_points < 16 || opts.steps_per_segment == 0 {
        return Err(Error::invalid("quantum oracle needs at least 16 grid points and one step"));
    }
    for p in &seq.pulses {
        if p.k_upper.x != 0.0 || p.k_upper.y != 0.0 || p.k_lower.x != 0.0 || p.k_lower.y != 0.0 {
            return Err(Error::OutOfScope("the wave-function oracle is one-dimensional; kicks must point along z".into()));
        }
    }
    let base = simulate(seq, pot, wave, opts.grid_points, opts.steps_per_segment, opts)?;
    let (out, conv) = if opts.check_convergence {
        let fine = simulate(seq, pot, wave, 2 * opts.grid_points, 2 * opts.steps_per_segment, opts)?;
        let pb = base.overlap.arg();
        let pf = wrap_near(fine.overlap.arg(), pb);
        let delta = (pf - pb).abs();
        if delta > opts.convergence_tol {
            return Err(Error::NotConverged {
                delta,
                tolerance: opts.convergence_tol,
            });
        }
        (fine, delta)
    } else {
        (base, f64::NAN)
    };
    if out.leakage > opts.leakage_tol {
        return Err(Error::NormLeakage {
            leakage: out.leakage,
            tolerance: opts.leakage_tol,
        });
    }
    if out.norm_drift > opts.norm_tol {
        return Err(Error::NormDrift { deviation: out.norm_drift });
    }
    let (dr, p_bar, phi_s) = separation_phase(seq)?;
    let phase = out.overlap.arg();
    Ok(OracleResult {
        phase,
        correction: f64::NAN,
        contrast: out.overlap.norm().min(1.0),
        separation: Separation {
            delta_r: dr.into(),
            p_bar: p_bar.into(),
            phi_s,
        },
        diagnostics: OracleDiagnostics {
            grid_points: Some(out.grid.n),
            dx: Some(out.grid.dx),
            dt: Some(out.dt),
            domain: Some([out.grid.z0, out.grid.z(out.grid.n - 1)]),
            leakage: Some(out.leakage),
            norm_drift: Some(out.norm_drift),
            convergence_metric: conv,
            ..Default::default()
        },
    })
}
