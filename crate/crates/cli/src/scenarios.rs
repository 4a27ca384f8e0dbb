//! Scenario files shipped with the tool, addressable by name.

use anyhow::{anyhow, Result};

use crate::config::{self, ScalesTable, ScenarioConfig};

pub const SCENARIOS: &[(&str, &str)] = &[
    ("mz_cubic_si", include_str!("../scenarios/mz_cubic_si.json")),
    ("null_potential", include_str!("../scenarios/null_potential.json")),
    ("desk_quantum_check", include_str!("../scenarios/desk_quantum_check.json")),
    ("fig4_sweep", include_str!("../scenarios/fig4_sweep.json")),
];

pub const TABLE1: &str = include_str!("../scenarios/table1.json");

pub fn text(name: &str) -> Result<&'static str> {
    SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let names: Vec<_> = SCENARIOS.iter().map(|(n, _)| *n).collect();
            anyhow!("unknown scenario `{name}`; shipped scenarios: {}", names.join(", "))
        })
}

pub fn scenario(name: &str) -> Result<ScenarioConfig> {
    config::parse(text(name)?)
}

pub fn table1() -> ScalesTable {
    config::parse_table(TABLE1).expect("shipped table parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_scenarios_parse_and_resolve() {
        for (name, _) in SCENARIOS {
            let c = scenario(name).unwrap();
            assert_eq!(c.name, *name);
            c.resolve().unwrap();
        }
        assert_eq!(table1().columns.len(), 4);
        assert!(scenario("nope").is_err());
    }
}
