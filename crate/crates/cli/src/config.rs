//! Scenario files: a JSON tree whose physical keys carry their units.
//!
//! Every field has a default, so a parsed config serializes back in fully
//! resolved form. Unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use aiphase_core::constants::HBAR;
use aiphase_core::engine::PhaseOptions;
use aiphase_core::model::{MachZehnder, Pulse, QuadOptions};
use aiphase_core::oracles::{ClassicalOptions, QuantumOptions};
use aiphase_core::potentials::{
    earth_taylor, EarthTaylorOptions, GridPotential, Interpolation, PolyCoeffs, PolynomialPotential, Potential, Scaled, Sum,
    ZeroPotential,
};
use aiphase_core::states::GaussianState;
use aiphase_core::validity::{Thresholds, ValidityOptions};
use aiphase_core::{Mat3, PulseSequence, Vec3};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_hbar")]
    pub hbar_J_s: f64,
    pub sequence: SequenceSpec,
    #[serde(default)]
    pub potential: PotentialSpec,
    pub state: StateSpec,
    #[serde(default)]
    pub engine: EngineSpec,
    #[serde(default)]
    pub validity: ValiditySpec,
    #[serde(default)]
    pub oracles: OracleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

fn default_hbar() -> f64 {
    HBAR
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    MachZehnder {
        T_s: f64,
        k_rad_per_m: f64,
        mass_kg: f64,
        g_m_per_s2: f64,
        #[serde(default)]
        laser_phases_rad: [f64; 3],
        #[serde(default)]
        r0_m: [f64; 3],
        #[serde(default)]
        v0_m_per_s: [f64; 3],
        #[serde(default)]
        t_d_s: Option<f64>,
    },
    Pulses {
        t_i_s: f64,
        t_d_s: f64,
        mass_kg: f64,
        g_vec_m_per_s2: [f64; 3],
        #[serde(default)]
        r0_m: [f64; 3],
        #[serde(default)]
        v0_m_per_s: [f64; 3],
        #[serde(default)]
        t_char_s: Option<f64>,
        pulses: Vec<PulseSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub t_s: f64,
    #[serde(default)]
    pub k_upper_rad_per_m: [f64; 3],
    #[serde(default)]
    pub k_lower_rad_per_m: [f64; 3],
    #[serde(default)]
    pub phi_upper_rad: f64,
    #[serde(default)]
    pub phi_lower_rad: f64,
}

/// One symmetric tensor entry; the value is placed at every permutation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry<const N: usize> {
    #[serde(with = "index_array")]
    pub index: [usize; N],
    pub value: f64,
}

mod index_array {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(a: &[usize; N], s: S) -> Result<S::Ok, S::Error> {
        a.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[usize; N], D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        v.try_into()
            .map_err(|v: Vec<usize>| serde::de::Error::custom(format!("index needs {N} components, got {}", v.len())))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolySpec {
    #[serde(default)]
    pub constant_J: f64,
    #[serde(default)]
    pub linear_J_per_m: [f64; 3],
    #[serde(default)]
    pub quadratic_J_per_m2: [[f64; 3]; 3],
    #[serde(default)]
    pub cubic_J_per_m3: Vec<Entry<3>>,
    #[serde(default)]
    pub quartic_J_per_m4: Vec<Entry<4>>,
}

impl PolySpec {
    /// Coefficients are Taylor derivatives: `V = c + c_i x_i + c_ij x_i x_j / 2 + ...`.
    fn coeffs(&self) -> Result<PolyCoeffs> {
        let mut c = PolyCoeffs {
            constant: self.constant_J,
            linear: Vec3::from(self.linear_J_per_m),
            quadratic: Mat3::from_fn(|i, j| self.quadratic_J_per_m2[i][j]),
            ..Default::default()
        };
        for e in &self.cubic_J_per_m3 {
            if e.index.iter().any(|&i| i > 2) {
                bail!("cubic index {:?} out of range", e.index);
            }
            let [i, j, k] = e.index;
            c.cubic.set_symmetric(i, j, k, e.value);
        }
        for e in &self.quartic_J_per_m4 {
            if e.index.iter().any(|&i| i > 2) {
                bail!("quartic index {:?} out of range", e.index);
            }
            let [i, j, k, l] = e.index;
            c.quartic.set_symmetric(i, j, k, l, e.value);
        }
        Ok(c)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationSpec {
    Linear,
    #[default]
    CubicSpline,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    #[default]
    Zero,
    Polynomial {
        #[serde(default)]
        origin_m: [f64; 3],
        #[serde(default)]
        coefficients: PolySpec,
        /// Separate coefficients on the lower branch.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower: Option<PolySpec>,
    },
    /// `V = c z^n`.
    MonomialZ { coefficient_J_per_m_power: f64, power: usize },
    EarthTaylor {
        #[serde(default = "default_g")]
        g_m_per_s2: f64,
        #[serde(default = "default_radius")]
        radius_m: f64,
        #[serde(default = "default_order")]
        order: usize,
        #[serde(default)]
        include_mgz: bool,
        #[serde(default = "yes")]
        include_gamma1: bool,
    },
    Grid {
        path: PathBuf,
        #[serde(default)]
        interpolation: InterpolationSpec,
    },
    Scaled { factor: f64, inner: Box<PotentialSpec> },
    Sum { terms: Vec<PotentialSpec> },
}

fn default_g() -> f64 {
    aiphase_core::constants::STANDARD_GRAVITY
}
fn default_radius() -> f64 {
    aiphase_core::constants::EARTH_RADIUS
}
fn default_order() -> usize {
    3
}
fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    TrapGroundState {
        omega_rad_per_s: [f64; 3],
        #[serde(default = "one")]
        widen: f64,
    },
    MinimumUncertainty {
        sigma_m: [f64; 3],
        #[serde(default = "one")]
        widen: f64,
    },
    Gaussian {
        sigma_rr_m2: [[f64; 3]; 3],
        #[serde(default)]
        sigma_rp_J_s: [[f64; 3]; 3],
        sigma_pp_kg2_m2_per_s2: [[f64; 3]; 3],
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSpec {
    pub magnus_order: usize,
    pub cumulant_order: usize,
    pub quad_nodes: usize,
    pub quad_panels: usize,
    pub override_validity: bool,
}

impl Default for EngineSpec {
    fn default() -> Self {
        let d = PhaseOptions::default();
        Self {
            magnus_order: d.magnus_order,
            cumulant_order: d.cumulant_order,
            quad_nodes: d.quad.nodes,
            quad_panels: d.quad.panels,
            override_validity: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValiditySpec {
    pub warn: f64,
    pub refuse: f64,
    pub samples_per_segment: usize,
    /// Wave-packet size; the state's width at detection when null.
    pub d_m: Option<f64>,
    pub t_char_s: Option<f64>,
}

impl Default for ValiditySpec {
    fn default() -> Self {
        let d = ValidityOptions::default();
        Self {
            warn: d.thresholds.warn,
            refuse: d.thresholds.refuse,
            samples_per_segment: d.samples_per_segment,
            d_m: None,
            t_char_s: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSpec {
    pub classical: bool,
    pub classical_steps_per_segment: usize,
    pub quantum: bool,
    pub quantum_grid_points: usize,
    pub quantum_steps_per_segment: usize,
    pub quantum_convergence_check: bool,
    pub phase_rel_tol: f64,
    pub contrast_abs_tol: f64,
    pub classical_rel_tol: f64,
}

impl Default for OracleSpec {
    fn default() -> Self {
        let c = ClassicalOptions::default();
        let q = QuantumOptions::default();
        Self {
            classical: true,
            classical_steps_per_segment: c.steps_per_segment,
            quantum: false,
            quantum_grid_points: q.grid_points,
            quantum_steps_per_segment: q.steps_per_segment,
            quantum_convergence_check: q.check_convergence,
            phase_rel_tol: 1e-3,
            contrast_abs_tol: 1e-3,
            classical_rel_tol: 1e-3,
        }
    }
}

impl ValiditySpec {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            warn: self.warn,
            refuse: self.refuse,
        }
    }
}

/// Values for one scalar addressed by a JSON pointer into the config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub path: String,
    #[serde(default)]
    pub values: Vec<f64>,
    /// Alternative to `values`: `count` points from `start` to `stop`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<RangeSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default)]
    pub log: bool,
}

impl SweepSpec {
    pub fn resolved_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        if let Some(r) = &self.range {
            v.extend((0..r.count).map(|i| {
                let f = if r.count > 1 { i as f64 / (r.count - 1) as f64 } else { 0.0 };
                if r.log {
                    (r.start.ln() + f * (r.stop.ln() - r.start.ln())).exp()
                } else {
                    r.start + f * (r.stop - r.start)
                }
            }));
        }
        v
    }
}

/// Hand-supplied validity scales, one column per perturbation source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalesTable {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_hbar")]
    pub hbar_J_s: f64,
    #[serde(default)]
    pub validity: ValiditySpec,
    pub columns: Vec<ScalesColumn>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalesColumn {
    pub name: String,
    pub delta_v_J: f64,
    pub delta_v_branch_J: f64,
    pub xi_m: f64,
    pub T_s: f64,
    pub d_m: f64,
    pub mass_kg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_log10_epsilon: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_log10_eta_d_over_xi: Option<i32>,
}

fn with_path<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        anyhow::anyhow!("config error at `{path}` (line {}, column {}): {inner}", inner.line(), inner.column())
    })
}

pub fn parse_table(text: &str) -> Result<ScalesTable> {
    with_path(text)
}

/// Parses a config, reporting the offending key path on schema errors.
pub fn parse(text: &str) -> Result<ScenarioConfig> {
    with_path(text)
}

pub fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = parse(&text).with_context(|| format!("in {}", path.display()))?;
    if let Some(dir) = path.parent() {
        cfg.potential.rebase(dir);
    }
    Ok(cfg)
}

pub fn to_pretty(cfg: &ScenarioConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes") + "\n"
}

/// Everything the library needs, built from a config.
pub struct Resolved {
    pub seq: PulseSequence,
    pub potential: Arc<dyn Potential>,
    pub state: GaussianState,
    pub phase: PhaseOptions,
    pub classical: ClassicalOptions,
    pub quantum: QuantumOptions,
}

impl PotentialSpec {
    /// Makes relative grid paths relative to the config file.
    fn rebase(&mut self, dir: &Path) {
        match self {
            PotentialSpec::Grid { path, .. } if path.is_relative() => *path = dir.join(&*path),
            PotentialSpec::Scaled { inner, .. } => inner.rebase(dir),
            PotentialSpec::Sum { terms } => terms.iter_mut().for_each(|t| t.rebase(dir)),
            _ => {}
        }
    }

    pub fn build(&self, mass: f64) -> Result<Arc<dyn Potential>> {
        Ok(match self {
            PotentialSpec::Zero => Arc::new(ZeroPotential),
            PotentialSpec::Polynomial {
                origin_m,
                coefficients,
                lower,
            } => {
                let u = coefficients.coeffs()?;
                let p = match lower {
                    Some(l) => PolynomialPotential::per_branch(u, l.coeffs()?)?,
                    None => PolynomialPotential::new(u)?,
                };
                Arc::new(p.with_origin(Vec3::from(*origin_m)))
            }
            PotentialSpec::MonomialZ { coefficient_J_per_m_power, power } => {
                Arc::new(PolynomialPotential::monomial_z(*coefficient_J_per_m_power, *power)?)
            }
            PotentialSpec::EarthTaylor {
                g_m_per_s2,
                radius_m,
                order,
                include_mgz,
                include_gamma1,
            } => {
                let (p, _) = earth_taylor(
                    *g_m_per_s2,
                    *radius_m,
                    mass,
                    EarthTaylorOptions {
                        order: *order,
                        include_mgz: *include_mgz,
                        include_gamma1: *include_gamma1,
                    },
                )?;
                Arc::new(p)
            }
            PotentialSpec::Grid { path, interpolation } => {
                let g = GridPotential::read(path).with_context(|| format!("loading grid {}", path.display()))?;
                let interp = match interpolation {
                    InterpolationSpec::Linear => Interpolation::Linear,
                    InterpolationSpec::CubicSpline => Interpolation::CubicSpline,
                };
                Arc::new(g.with_interpolation(interp)?)
            }
            PotentialSpec::Scaled { factor, inner } => Arc::new(Scaled::new(*factor, inner.build(mass)?)),
            PotentialSpec::Sum { terms } => Arc::new(Sum::new(terms.iter().map(|t| t.build(mass)).collect::<Result<_>>()?)),
        })
    }
}

impl ScenarioConfig {
    pub fn sequence(&self) -> Result<PulseSequence> {
        let hbar = self.hbar_J_s;
        let seq = match &self.sequence {
            SequenceSpec::MachZehnder {
                T_s,
                k_rad_per_m,
                mass_kg,
                g_m_per_s2,
                laser_phases_rad,
                r0_m,
                v0_m_per_s,
                t_d_s,
            } => {
                let mut mz = MachZehnder::new(*T_s, *k_rad_per_m, *mass_kg, *g_m_per_s2, hbar)
                    .with_laser_phases(*laser_phases_rad)
                    .with_initial(Vec3::from(*r0_m), Vec3::from(*v0_m_per_s));
                if let Some(t) = t_d_s {
                    mz = mz.with_detection_time(*t);
                }
                mz.build()?
            }
            SequenceSpec::Pulses {
                t_i_s,
                t_d_s,
                mass_kg,
                g_vec_m_per_s2,
                r0_m,
                v0_m_per_s,
                t_char_s,
                pulses,
            } => {
                let seq = PulseSequence {
                    t_i: *t_i_s,
                    t_d: *t_d_s,
                    pulses: pulses
                        .iter()
                        .map(|p| Pulse {
                            time: p.t_s,
                            k_upper: Vec3::from(p.k_upper_rad_per_m),
                            k_lower: Vec3::from(p.k_lower_rad_per_m),
                            phi_upper: p.phi_upper_rad,
                            phi_lower: p.phi_lower_rad,
                        })
                        .collect(),
                    mass: *mass_kg,
                    g_vec: Vec3::from(*g_vec_m_per_s2),
                    r_mean0: Vec3::from(*r0_m),
                    v_mean0: Vec3::from(*v0_m_per_s),
                    hbar,
                    t_char: *t_char_s,
                };
                seq.validate()?;
                seq
            }
        };
        Ok(seq)
    }

    pub fn state(&self, mass: f64) -> Result<GaussianState> {
        let hbar = self.hbar_J_s;
        let m3 = |a: &[[f64; 3]; 3]| Mat3::from_fn(|i, j| a[i][j]);
        Ok(match &self.state {
            StateSpec::TrapGroundState { omega_rad_per_s, widen } => {
                GaussianState::trap_ground_state(*omega_rad_per_s, mass, hbar)?.widened(*widen)?
            }
            StateSpec::MinimumUncertainty { sigma_m, widen } => {
                GaussianState::minimum_uncertainty(*sigma_m, mass, hbar)?.widened(*widen)?
            }
            StateSpec::Gaussian {
                sigma_rr_m2,
                sigma_rp_J_s,
                sigma_pp_kg2_m2_per_s2,
            } => GaussianState::new(
                Vec3::zeros(),
                Vec3::zeros(),
                m3(sigma_rr_m2),
                m3(sigma_rp_J_s),
                m3(sigma_pp_kg2_m2_per_s2),
                mass,
                hbar,
            )?,
        })
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let seq = self.sequence()?;
        let state = self.state(seq.mass)?;
        let potential = self.potential.build(seq.mass)?;
        let e = &self.engine;
        let v = &self.validity;
        let o = &self.oracles;
        let phase = PhaseOptions {
            magnus_order: e.magnus_order,
            cumulant_order: e.cumulant_order,
            quad: QuadOptions {
                nodes: e.quad_nodes,
                panels: e.quad_panels,
                ..QuadOptions::default()
            },
            validity: ValidityOptions {
                samples_per_segment: v.samples_per_segment,
                d: v.d_m,
                t_char: v.t_char_s,
                thresholds: v.thresholds(),
            },
            override_validity: e.override_validity,
        };
        Ok(Resolved {
            seq,
            potential,
            state,
            phase,
            classical: ClassicalOptions {
                steps_per_segment: o.classical_steps_per_segment,
                ..ClassicalOptions::default()
            },
            quantum: QuantumOptions {
                grid_points: o.quantum_grid_points,
                steps_per_segment: o.quantum_steps_per_segment,
                check_convergence: o.quantum_convergence_check,
                ..QuantumOptions::default()
            },
        })
    }
}
