//! Scale analysis of the perturbation along the unperturbed paths: how much
//! the potential varies, how much it differs between the branches, and over
//! which length, and the dimensionless numbers that gate the expansion.

use serde::{Serialize, Serializer};

use crate::model::{Branch, Contour, PulseSequence};
use crate::potentials::Potential;
use crate::states::GaussianState;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Ok,
    Warn,
    Refuse,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    pub warn: f64,
    pub refuse: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { warn: 1e-2, refuse: 1e-1 }
    }
}

impl Thresholds {
    pub fn level(&self, x: f64) -> Level {
        if !(x < self.refuse) {
            Level::Refuse
        } else if x >= self.warn {
            Level::Warn
        } else {
            Level::Ok
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidityOptions {
    /// Samples per branch segment.
    pub samples_per_segment: usize,
    /// Wave-packet size `d` [m]; the largest axis width at `t_d` when unset.
    pub d: Option<f64>,
    /// Characteristic time [s]; taken from the sequence when unset.
    pub t_char: Option<f64>,
    pub thresholds: Thresholds,
}

impl Default for ValidityOptions {
    fn default() -> Self {
        Self {
            samples_per_segment: 1000,
            d: None,
            t_char: None,
            thresholds: Thresholds::default(),
        }
    }
}

/// Scales probed from the potential itself.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scales {
    /// `ΔV`: max minus min of `V` over both paths [J]
    pub delta_v_extremal: f64,
    /// `δV`: max over `t` of `|V_u(t) - V_l(t)|` [J]
    pub delta_v_branch: f64,
    /// `ξ = ΔV / <|∇V|>` with the gradient averaged over time on both paths [m]
    #[serde(serialize_with = "finite_or_null")]
    pub xi: f64,
    /// `ΔV / max|∇V|`, which for a sinusoid gives twice the inverse wave number [m]
    #[serde(serialize_with = "finite_or_null")]
    pub xi_max_gradient: f64,
    pub mean_gradient: f64,
    pub max_gradient: f64,
    /// `ξ^n max|V^(n)| / ΔV` for `n = 2, 3`; about one when the scales are consistent.
    pub higher_order_ratios: Vec<(usize, f64)>,
}

fn finite_or_null<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Flags {
    pub epsilon: Level,
    pub d_over_xi: Level,
    pub eta_d_over_xi: Level,
    pub overall: Level,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidityReport {
    pub delta_v_extremal: f64,
    pub delta_v_branch: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub xi: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub xi_max_gradient: f64,
    pub higher_order_ratios: Vec<(usize, f64)>,
    pub t_char: f64,
    pub d: f64,
    pub mass: f64,
    pub hbar: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub d_over_xi: f64,
    pub eta_d_over_xi: f64,
    /// `|φ1 wave-packet|` when known; not gated, but large values mean `η`
    /// understates the phase.
    pub phi1_wavepacket_magnitude: Option<f64>,
    pub thresholds: Thresholds,
    pub flags: Flags,
}

impl ValidityReport {
    pub fn level(&self) -> Level {
        self.flags.overall
    }

    /// Human-readable list of the gates at `level` or above.
    pub fn violations(&self, level: Level) -> Vec<String> {
        let mut out = Vec::new();
        for (name, value, l) in [
            ("epsilon", self.epsilon, self.flags.epsilon),
            ("d/xi", self.d_over_xi, self.flags.d_over_xi),
            ("eta*d/xi", self.eta_d_over_xi, self.flags.eta_d_over_xi),
        ] {
            if l >= level {
                out.push(format!("{name} = {value:.3e}"));
            }
        }
        out
    }
}

struct Sample {
    t: f64,
    v: [f64; 2],
    grad: [f64; 2],
}

fn sample_at(pot: &dyn Potential, contour: &Contour, t: f64) -> Result<Sample> {
    let mut v = [0.0; 2];
    let mut grad = [0.0; 2];
    for (n, b) in Branch::BOTH.iter().enumerate() {
        let p = contour.point(*b, t)?;
        let d = pot.derivatives(&p.r, t, *b, 1)?;
        if !(d.value.is_finite() && d.gradient.iter().all(|x| x.is_finite())) {
            return Err(Error::NonFinite { branch: *b, t });
        }
        v[n] = d.value;
        grad[n] = d.gradient.norm();
    }
    Ok(Sample { t, v, grad })
}

/// Probes `ΔV`, `δV` and `ξ` by sampling the potential along both
/// unperturbed paths, with one refinement pass around each extremum.
pub fn probe_scales(seq: &PulseSequence, pot: &dyn Potential, samples_per_segment: usize) -> Result<Scales> {
    let contour = Contour::new(seq)?;
    let n = samples_per_segment.max(2);
    let bps = seq.breakpoints();
    let mut samples = Vec::new();
    let mut mean_grad_num = 0.0;
    for w in bps.windows(2) {
        let (a, b) = (w[0], w[1]);
        let h = (b - a) / (n - 1) as f64;
        for i in 0..n {
            // stay inside the segment so kicks do not mix neighbouring pieces
            let t = if i + 1 == n { b } else { a + i as f64 * h };
            let s = sample_at(pot, &contour, t)?;
            let wt = if i == 0 || i + 1 == n { 0.5 * h } else { h };
            mean_grad_num += wt * (s.grad[0] + s.grad[1]);
            samples.push(s);
        }
    }
    let mean_gradient = mean_grad_num / (2.0 * seq.duration());

    // refinement near the extremal samples
    let key_max = |f: &dyn Fn(&Sample) -> f64| {
        samples
            .iter()
            .map(|s| (s.t, f(s)))
            .fold((samples[0].t, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
            .0
    };
    let targets = [
        key_max(&|s| s.v[0].max(s.v[1])),
        key_max(&|s| -s.v[0].min(s.v[1])),
        key_max(&|s| (s.v[0] - s.v[1]).abs()),
        key_max(&|s| s.grad[0].max(s.grad[1])),
    ];
    let span = seq.duration() / (n - 1) as f64;
    let mut extra = Vec::new();
    for tc in targets {
        let lo = (tc - span).max(seq.t_i);
        let hi = (tc + span).min(seq.t_d);
        for i in 0..=20 {
            extra.push(sample_at(pot, &contour, lo + (hi - lo) * i as f64 / 20.0)?);
        }
    }
    samples.extend(extra);

    let mut vmax = f64::NEG_INFINITY;
    let mut vmin = f64::INFINITY;
    let mut dv = 0.0f64;
    let mut gmax = 0.0f64;
    for s in &samples {
        vmax = vmax.max(s.v[0]).max(s.v[1]);
        vmin = vmin.min(s.v[0]).min(s.v[1]);
        dv = dv.max((s.v[0] - s.v[1]).abs());
        gmax = gmax.max(s.grad[0]).max(s.grad[1]);
    }
    let delta_v_extremal = vmax - vmin;
    let ratio = |num: f64, den: f64| if num == 0.0 { f64::INFINITY } else { num / den };
    let xi = if delta_v_extremal == 0.0 {
        f64::INFINITY
    } else {
        ratio(delta_v_extremal, mean_gradient)
    };
    let xi_max_gradient = if delta_v_extremal == 0.0 {
        f64::INFINITY
    } else {
        ratio(delta_v_extremal, gmax)
    };

    let higher_order_ratios = if xi.is_finite() {
        higher_order(seq, pot, &contour, xi, delta_v_extremal, n.min(200)).unwrap_or_default()
    } else {
        Vec::new()
    };

    Ok(Scales {
        delta_v_extremal,
        delta_v_branch: dv,
        xi,
        xi_max_gradient,
        mean_gradient,
        max_gradient: gmax,
        higher_order_ratios,
    })
}

fn higher_order(
    seq: &PulseSequence,
    pot: &dyn Potential,
    contour: &Contour,
    xi: f64,
    delta_v: f64,
    n: usize,
) -> Result<Vec<(usize, f64)>> {
    let mut m2 = 0.0f64;
    let mut m3 = 0.0f64;
    for w in seq.breakpoints().windows(2) {
        for i in 0..n {
            let t = w[0] + (w[1] - w[0]) * i as f64 / (n - 1) as f64;
            for b in Branch::BOTH {
                let p = contour.point(b, t)?;
                let d = pot.derivatives(&p.r, t, b, 3)?;
                m2 = m2.max(d.hessian.norm());
                m3 = m3.max(d.third.norm());
            }
        }
    }
    Ok(vec![(2, xi * xi * m2 / delta_v), (3, xi.powi(3) * m3 / delta_v)])
}

/// Assembles the dimensionless numbers from explicit scales.
#[allow(clippy::too_many_arguments)]
pub fn validity_report_from_parts(
    delta_v_extremal: f64,
    delta_v_branch: f64,
    xi: f64,
    t_char: f64,
    d: f64,
    mass: f64,
    hbar: f64,
    thresholds: Thresholds,
) -> Result<ValidityReport> {
    for (name, x) in [
        ("delta_v_extremal", delta_v_extremal),
        ("delta_v_branch", delta_v_branch),
        ("d", d),
    ] {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::invalid(format!("{name} must be finite and non-negative, got {x}")));
        }
    }
    if !(xi > 0.0) {
        return Err(Error::invalid(format!("xi must be positive, got {xi}")));
    }
    if !(t_char > 0.0 && t_char.is_finite() && mass > 0.0 && hbar > 0.0) {
        return Err(Error::invalid("T, mass and hbar must be positive"));
    }
    let epsilon = if xi.is_finite() {
        delta_v_extremal * t_char * t_char / (xi * xi * mass)
    } else {
        0.0
    };
    let eta = delta_v_branch * t_char / hbar;
    let d_over_xi = d / xi;
    let eta_d_over_xi = eta * d_over_xi;
    let flags = {
        let e = thresholds.level(epsilon);
        let a = thresholds.level(d_over_xi);
        let b = thresholds.level(eta_d_over_xi);
        Flags {
            epsilon: e,
            d_over_xi: a,
            eta_d_over_xi: b,
            overall: e.max(a).max(b),
        }
    };
    Ok(ValidityReport {
        delta_v_extremal,
        delta_v_branch,
        xi,
        xi_max_gradient: xi,
        higher_order_ratios: Vec::new(),
        t_char,
        d,
        mass,
        hbar,
        epsilon,
        eta,
        d_over_xi,
        eta_d_over_xi,
        phi1_wavepacket_magnitude: None,
        thresholds,
        flags,
    })
}

/// Full report for a configuration, with scales probed from `pot`.
pub fn validity_report(
    seq: &PulseSequence,
    pot: &dyn Potential,
    state: &GaussianState,
    opts: &ValidityOptions,
) -> Result<ValidityReport> {
    let scales = probe_scales(seq, pot, opts.samples_per_segment)?;
    validity_report_from_scales(&scales, seq, state, opts)
}

pub fn validity_report_from_scales(
    scales: &Scales,
    seq: &PulseSequence,
    state: &GaussianState,
    opts: &ValidityOptions,
) -> Result<ValidityReport> {
    let t_char = opts.t_char.unwrap_or_else(|| seq.characteristic_time());
    let d = opts.d.unwrap_or_else(|| state.width_at(seq.t_d - seq.t_i));
    let mut rep = validity_report_from_parts(
        scales.delta_v_extremal,
        scales.delta_v_branch,
        scales.xi,
        t_char,
        d,
        seq.mass,
        seq.hbar,
        opts.thresholds,
    )?;
    rep.xi_max_gradient = scales.xi_max_gradient;
    rep.higher_order_ratios = scales.higher_order_ratios.clone();
    Ok(rep)
}
