use std::fs;
use std::path::Path;
use std::thread;

use anyhow::{Context, Result};
use bpc_core::{run, MetricsLog, Protocol, Scenario};

use crate::scenario_file::parse_scenario;

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read scenario {}", path.display()))?;
    parse_scenario(&text).with_context(|| format!("invalid scenario {}", path.display()))
}

pub fn run_arm(scenario: &Scenario, protocol: Protocol, seed: u64) -> Result<MetricsLog> {
    let s = Scenario { protocol, seed, ..scenario.clone() };
    Ok(run(&s)?)
}

/// Runs both protocols for seeds `first_seed..first_seed + count`, in
/// parallel. Logs come back ordered by seed, BPC before fixed.
pub fn compare(scenario: &Scenario, first_seed: u64, count: u64) -> Result<Vec<MetricsLog>> {
    let jobs: Vec<(u64, Protocol)> = (first_seed..first_seed + count)
        .flat_map(|seed| [(seed, Protocol::Bpc), (seed, Protocol::Fixed)])
        .collect();
    thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(seed, protocol)| scope.spawn(move || run_arm(scenario, protocol, seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    })
}
