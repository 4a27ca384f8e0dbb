use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use aiphase::commands::{self, Output};
use aiphase::config::{self, ScenarioConfig};
use aiphase::{acceptance, scenarios};

/// Phase, contrast and validity of light-pulse atom interferometers.
#[derive(Parser)]
#[command(name = "aiphase", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Scenario config file (JSON).
    #[arg(long, short, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Name of a shipped scenario.
    #[arg(long, short)]
    scenario: Option<String>,
    /// Write the result here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl Input {
    fn load(&self) -> Result<ScenarioConfig> {
        match (&self.config, &self.scenario) {
            (Some(p), _) => config::load(p),
            (None, Some(name)) => scenarios::scenario(name),
            (None, None) => bail!("give a config file with --config or a shipped scenario with --scenario"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Phase breakdown, contrast and validity report.
    Phase(Input),
    /// Validity scales and gates only. `--table` takes hand-supplied scales.
    Validity {
        #[command(flatten)]
        input: Input,
        /// File of hand-supplied scales (see scenarios/table1.json); `table1` names the shipped one.
        #[arg(long, conflicts_with_all = ["config", "scenario"])]
        table: Option<String>,
    },
    /// Classical and/or wave-function oracle, as enabled in the config.
    Oracle(Input),
    /// Sweep one config scalar and write CSV.
    Sweep {
        #[command(flatten)]
        input: Input,
        /// JSON pointer of the swept scalar, e.g. /sequence/T_s (overrides the config's sweep).
        #[arg(long)]
        path: Option<String>,
        /// Comma-separated values (overrides the config's sweep).
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Engine against the oracles for a scenario; without one, the acceptance suite.
    Verify {
        #[command(flatten)]
        input: Input,
        /// Acceptance criteria to skip, e.g. --skip 6.
        #[arg(long, value_delimiter = ',')]
        skip: Vec<u8>,
    },
    /// Print a shipped scenario in resolved form, or list them.
    Show { name: Option<String> },
}

fn emit(text: &str, path: Option<&PathBuf>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn finish(out: Output, path: Option<&PathBuf>) -> Result<i32> {
    emit(&out.text, path)?;
    Ok(out.exit_code)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Phase(i) => finish(commands::phase(&i.load()?)?, i.output.as_ref()),
        Command::Validity { input, table } => match table {
            Some(t) => {
                let table = if t == "table1" {
                    scenarios::table1()
                } else {
                    let text = std::fs::read_to_string(&t).with_context(|| format!("reading {t}"))?;
                    config::parse_table(&text).with_context(|| format!("in {t}"))?
                };
                finish(commands::validity_table(&table)?, input.output.as_ref())
            }
            None => finish(commands::validity(&input.load()?)?, input.output.as_ref()),
        },
        Command::Oracle(i) => finish(commands::oracle(&i.load()?)?, i.output.as_ref()),
        Command::Sweep {
            input,
            path,
            values,
            workers,
        } => {
            let cfg = input.load()?;
            let mut spec = cfg.sweep.clone().unwrap_or(config::SweepSpec {
                path: String::new(),
                values: Vec::new(),
                range: None,
            });
            if let Some(p) = path {
                spec.path = p;
            }
            if let Some(v) = values {
                spec.values = v;
                spec.range = None;
            }
            if spec.path.is_empty() {
                bail!("no sweep path: give --path or a `sweep` section in the config");
            }
            emit(&commands::sweep_csv(&cfg, &spec, workers)?, input.output.as_ref())?;
            Ok(0)
        }
        Command::Verify { input, skip } => {
            if input.config.is_some() || input.scenario.is_some() {
                return finish(commands::verify(&input.load()?)?, input.output.as_ref());
            }
            let verdicts = acceptance::run_except(&skip);
            let text: String = verdicts.iter().map(|v| v.line() + "\n").collect();
            emit(&text, input.output.as_ref())?;
            Ok(if verdicts.iter().all(|v| v.pass) { 0 } else { 1 })
        }
        Command::Show { name } => {
            match name {
                Some(n) if n == "table1" => print!("{}", scenarios::TABLE1),
                Some(n) => print!("{}", config::to_pretty(&scenarios::scenario(&n)?)),
                None => {
                    for (n, _) in scenarios::SCENARIOS {
                        println!("{n}");
                    }
                    println!("table1");
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
