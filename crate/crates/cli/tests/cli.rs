use std::path::PathBuf;
use std::process::Command;

use aiphase::commands::{sweep_csv, with_parameter};
use aiphase::config::{self, SweepSpec};
use aiphase::scenarios;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aiphase"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("aiphase-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn shipped_scenarios_round_trip() {
    for (name, text) in scenarios::SCENARIOS {
        let s1 = config::to_pretty(&config::parse(text).unwrap());
        let s2 = config::to_pretty(&config::parse(&s1).unwrap());
        assert_eq!(s1, s2, "{name}");
    }
    let t = scenarios::table1();
    let s1 = serde_json::to_string_pretty(&t).unwrap();
    assert_eq!(s1, serde_json::to_string_pretty(&config::parse_table(&s1).unwrap()).unwrap());
}

#[test]
fn phase_output_is_deterministic_and_carries_provenance() {
    let (c1, a, _) = run(&["phase", "--scenario", "mz_cubic_si"]);
    let (c2, b, _) = run(&["phase", "--scenario", "mz_cubic_si"]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["tool"], "aiphase");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["sequence"]["T_s"], 1.0);
    assert_eq!(v["config"]["engine"]["magnus_order"], 2);
    assert!(v["result"]["phi0"].as_f64().unwrap().abs() > 1e8);
}

#[test]
fn null_potential_scenario() {
    let (code, out, _) = run(&["phase", "-s", "null_potential"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    for k in ["phi1_classical", "phi1_wavepacket", "phi2", "correction"] {
        assert_eq!(v["result"][k], 0.0, "{k}");
    }
    assert_eq!(v["result"]["contrast"], 1.0);
}

#[test]
fn config_file_output_file_and_errors() {
    let mut cfg = scenarios::scenario("desk_quantum_check").unwrap();
    cfg.engine.override_validity = false;
    cfg.state = config::StateSpec::MinimumUncertainty {
        sigma_m: [1.0; 3],
        widen: 10.0,
    };
    let path = scratch("refused.json");
    std::fs::write(&path, config::to_pretty(&cfg)).unwrap();
    let out_path = scratch("refused.out.json");
    let (code, stdout, _) = run(&["phase", "-c", path.to_str().unwrap(), "-o", out_path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stdout.is_empty());
    let written = std::fs::read_to_string(&out_path).unwrap();
    assert!(written.contains("\"status\": \"refused\""));

    let bad = config::to_pretty(&cfg).replace("\"T_s\"", "\"T_seconds\"");
    std::fs::write(&path, bad).unwrap();
    let (code, _, err) = run(&["phase", "-c", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("sequence") && err.contains("line"), "{err}");

    let (code, _, err) = run(&["phase", "-s", "no_such"]);
    assert_eq!(code, 1);
    assert!(err.contains("mz_cubic_si"));
}

#[test]
fn validity_table_command() {
    let (code, out, _) = run(&["validity", "--table", "table1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"][0]["report"]["d_over_xi"], 5e-4);
}

#[test]
fn fig4_sweep_columns() {
    let cfg = scenarios::scenario("fig4_sweep").unwrap();
    let spec = SweepSpec {
        path: "/sequence/T_s".into(),
        values: vec![0.5, 1.0, 2.0],
        range: None,
    };
    let csv = sweep_csv(&cfg, &spec, 2).unwrap();
    let mut lines = csv.lines();
    let header: Vec<_> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "sequence.T_s");
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').take(header.len() - 1).map(|x| x.parse().unwrap()).collect())
        .collect();
    let at1 = &rows[1];
    assert!((at1[col("phi0_rad")].abs() - 1.58e8).abs() < 0.02e8);
    let cl = at1[col("phi1_classical_rad")].abs();
    let wp = at1[col("phi1_wavepacket_rad")].abs();
    assert!(wp < 1e-3 * cl, "wave-packet {wp} vs {cl}");
    // phi0 grows as T^2
    assert!((rows[2][col("phi0_rad")] / rows[1][col("phi0_rad")] - 4.0).abs() < 1e-11);

    let via_cli = run(&["sweep", "-s", "fig4_sweep", "--values", "0.5,1,2", "--workers", "3"]).1;
    assert_eq!(via_cli, csv);
}

#[test]
fn lambda_sweep_is_linear_and_empty_sweep_has_header() {
    let mut cfg = scenarios::scenario("desk_quantum_check").unwrap();
    cfg.potential = config::PotentialSpec::Scaled {
        factor: 1.0,
        inner: Box::new(cfg.potential.clone()),
    };
    let spec = SweepSpec {
        path: "/potential/factor".into(),
        values: vec![0.01, 0.1, 1.0, 10.0],
        range: None,
    };
    let csv = sweep_csv(&cfg, &spec, 4).unwrap();
    let pts: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse::<f64>().unwrap().ln(), f[2].parse::<f64>().unwrap().abs().ln())
        })
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope - 1.0).abs() < 1e-6, "slope {slope}");

    let empty = SweepSpec {
        path: "/potential/factor".into(),
        values: vec![],
        range: None,
    };
    let csv = sweep_csv(&cfg, &empty, 1).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(with_parameter(&cfg, "/potential/missing", 1.0).is_err());
}

#[test]
fn desk_scenario_verifies() {
    let (code, out, err) = run(&["verify", "-s", "desk_quantum_check"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["passed"], true);
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["pass"] == true));
}

#[test]
fn show_lists_and_prints() {
    let (code, out, _) = run(&["show"]);
    assert_eq!(code, 0);
    assert!(out.contains("desk_quantum_check") && out.contains("table1"));
    let (_, out, _) = run(&["show", "mz_cubic_si"]);
    assert!(config::parse(&out).is_ok());
}
