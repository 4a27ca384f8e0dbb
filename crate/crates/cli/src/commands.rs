//! The work behind each subcommand. Every result is wrapped in an
//! [`Envelope`] carrying the tool version and the resolved config.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use aiphase_core::engine::{phase_total, PhaseBreakdown};
use aiphase_core::oracles::{
    classical_oracle, quantum_oracle_1d, verify_engine, InitialWave, OracleResult, VerifyOptions, VerifyReport, VerifyTolerances,
};
use aiphase_core::validity::{probe_scales, validity_report_from_parts, validity_report_from_scales, Level, Scales, ValidityReport};
use aiphase_core::Error;

use crate::config::{self, ScalesTable, ScenarioConfig, SweepSpec};

pub const TOOL: &str = "aiphase";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
pub struct Envelope<C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub status: Status,
    pub config: C,
    pub result: R,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Warn,
    Refused,
    Failed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok | Status::Warn => 0,
            Status::Refused => 2,
            Status::Failed => 1,
        }
    }

    fn from_level(l: Level) -> Self {
        match l {
            Level::Ok => Status::Ok,
            Level::Warn => Status::Warn,
            Level::Refuse => Status::Refused,
        }
    }
}

/// A finished command: the document to write and the process exit code.
pub struct Output {
    pub text: String,
    pub exit_code: i32,
}

fn envelope<C: Serialize, R: Serialize>(command: &'static str, status: Status, config: C, result: R) -> Output {
    let env = Envelope {
        tool: TOOL,
        version: VERSION,
        command,
        status,
        config,
        result,
    };
    Output {
        text: serde_json::to_string_pretty(&env).expect("results serialize") + "\n",
        exit_code: status.exit_code(),
    }
}

pub fn phase(cfg: &ScenarioConfig) -> Result<Output> {
    let r = cfg.resolve()?;
    match phase_total(&r.seq, r.potential.as_ref(), &r.state, &r.phase) {
        Ok(b) => {
            // an overridden refusal is reported as a warning
            let status = match Status::from_level(b.validity.level()) {
                Status::Refused => Status::Warn,
                s => s,
            };
            Ok(envelope("phase", status, cfg, b))
        }
        Err(Error::ValidityRefused { reason, breakdown }) => {
            #[derive(Serialize)]
            struct Refusal {
                reason: String,
                breakdown: PhaseBreakdown,
            }
            Ok(envelope(
                "phase",
                Status::Refused,
                cfg,
                Refusal {
                    reason,
                    breakdown: *breakdown,
                },
            ))
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Serialize)]
pub struct ValidityResult {
    pub scales: Scales,
    pub report: ValidityReport,
}

pub fn validity(cfg: &ScenarioConfig) -> Result<Output> {
    let r = cfg.resolve()?;
    let scales = probe_scales(&r.seq, r.potential.as_ref(), r.phase.validity.samples_per_segment)?;
    let report = validity_report_from_scales(&scales, &r.seq, &r.state, &r.phase.validity)?;
    let status = Status::from_level(report.level());
    Ok(envelope("validity", status, cfg, ValidityResult { scales, report }))
}

#[derive(Debug, Serialize)]
pub struct TableRow {
    pub name: String,
    pub report: ValidityReport,
    pub log10_epsilon: f64,
    pub log10_eta_d_over_xi: f64,
}

pub fn table_rows(table: &ScalesTable) -> Result<Vec<TableRow>> {
    table
        .columns
        .iter()
        .map(|c| {
            let report = validity_report_from_parts(
                c.delta_v_J,
                c.delta_v_branch_J,
                c.xi_m,
                c.T_s,
                c.d_m,
                c.mass_kg,
                table.hbar_J_s,
                table.validity.thresholds(),
            )
            .with_context(|| format!("column {}", c.name))?;
            Ok(TableRow {
                name: c.name.clone(),
                log10_epsilon: report.epsilon.log10(),
                log10_eta_d_over_xi: report.eta_d_over_xi.log10(),
                report,
            })
        })
        .collect()
}

pub fn validity_table(table: &ScalesTable) -> Result<Output> {
    let rows = table_rows(table)?;
    let worst = rows.iter().map(|r| r.report.level()).max().unwrap_or(Level::Ok);
    Ok(envelope("validity", Status::from_level(worst), table, rows))
}

#[derive(Debug, Serialize)]
pub struct OracleRun {
    pub classical: Option<OracleResult>,
    pub quantum: Option<OracleResult>,
}

pub fn oracle(cfg: &ScenarioConfig) -> Result<Output> {
    let r = cfg.resolve()?;
    if !cfg.oracles.classical && !cfg.oracles.quantum {
        bail!("both oracles are disabled in the config (oracles.classical, oracles.quantum)");
    }
    let classical = cfg
        .oracles
        .classical
        .then(|| classical_oracle(&r.seq, r.potential.as_ref(), &r.classical))
        .transpose()?;
    let quantum = cfg
        .oracles
        .quantum
        .then(|| quantum_oracle_1d(&r.seq, r.potential.as_ref(), &InitialWave::Gaussian(r.state.clone()), &r.quantum))
        .transpose()?;
    Ok(envelope("oracle", Status::Ok, cfg, OracleRun { classical, quantum }))
}

pub fn verify_report(cfg: &ScenarioConfig) -> Result<VerifyReport> {
    let r = cfg.resolve()?;
    let o = &cfg.oracles;
    let opts = VerifyOptions {
        engine: r.phase,
        classical: o.classical.then_some(r.classical),
        quantum: o.quantum.then(|| (InitialWave::Gaussian(r.state.clone()), r.quantum)),
        tolerances: VerifyTolerances {
            phase_rel: o.phase_rel_tol,
            contrast_abs: o.contrast_abs_tol,
            classical_rel: o.classical_rel_tol,
            ..VerifyTolerances::default()
        },
    };
    Ok(verify_engine(&r.seq, r.potential.as_ref(), &r.state, &opts)?)
}

pub fn verify(cfg: &ScenarioConfig) -> Result<Output> {
    let rep = verify_report(cfg)?;
    let status = if rep.passed { Status::Ok } else { Status::Failed };
    Ok(envelope("verify", status, cfg, rep))
}

/// Column names of the sweep table, after the swept parameter.
pub const SWEEP_COLUMNS: &[&str] = &[
    "phi0_rad",
    "phi1_classical_rad",
    "phi1_wavepacket_rad",
    "phi2_rad",
    "correction_rad",
    "total_rad",
    "contrast",
    "epsilon",
    "eta",
    "d_over_xi",
    "eta_d_over_xi",
    "validity",
];

/// Sets the scalar at a JSON pointer in the config.
pub fn with_parameter(cfg: &ScenarioConfig, path: &str, value: f64) -> Result<ScenarioConfig> {
    let mut tree = serde_json::to_value(cfg)?;
    let slot = tree
        .pointer_mut(path)
        .with_context(|| format!("sweep path `{path}` does not exist in the resolved config"))?;
    if !slot.is_number() {
        bail!("sweep path `{path}` points at {slot}, not a number");
    }
    *slot = serde_json::Value::from(value);
    config::parse(&tree.to_string()).with_context(|| format!("config with {path} = {value}"))
}

/// Rows run concurrently on `workers` threads; output keeps input order.
pub fn sweep_csv(cfg: &ScenarioConfig, spec: &SweepSpec, workers: usize) -> Result<String> {
    let values = spec.resolved_values();
    let mut base = cfg.clone();
    base.sweep = None;
    base.engine.override_validity = true;
    // checks the path even when there is nothing to sweep
    with_parameter(&base, &spec.path, 0.0)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("building the sweep thread pool")?;
    let rows: Vec<Result<Vec<String>>> = pool.install(|| {
        values
            .par_iter()
            .map(|&v| {
                let c = with_parameter(&base, &spec.path, v)?;
                let r = c.resolve()?;
                let b = phase_total(&r.seq, r.potential.as_ref(), &r.state, &r.phase)
                    .with_context(|| format!("{} = {v}", spec.path))?;
                let val = &b.validity;
                let level = serde_json::to_value(val.level())?.as_str().unwrap_or("").to_string();
                Ok([
                    v,
                    b.phi0,
                    b.phi1_classical,
                    b.phi1_wavepacket,
                    b.phi2,
                    b.correction,
                    b.total,
                    b.contrast,
                    val.epsilon,
                    val.eta,
                    val.d_over_xi,
                    val.eta_d_over_xi,
                ]
                .iter()
                .map(|x| x.to_string())
                .chain(std::iter::once(level))
                .collect())
            })
            .collect()
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![spec.path.trim_start_matches('/').replace('/', ".")];
    header.extend(SWEEP_COLUMNS.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for row in rows {
        w.write_record(row?)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
