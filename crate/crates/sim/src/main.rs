use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use bpc_core::fixture::{self, NEIGHBORS};
use bpc_core::Protocol;
use bpc_sim::{compare, load_scenario, metrics, run_arm};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bpcsim", version, about = "Beacon power control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Bpc,
    Fixed,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Bpc => Protocol::Bpc,
            ProtocolArg::Fixed => Protocol::Fixed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write metrics.csv and summary.csv.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the scenario's protocol.
        #[arg(long, value_enum)]
        protocol: Option<ProtocolArg>,
    },
    /// Run BPC and fixed power on the same layouts.
    Compare {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// First seed; defaults to the scenario's.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        seeds: u64,
    },
    /// Print the built-in five-neighbor example.
    Golden,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { scenario, out, seed, protocol } => {
            let s = load_scenario(&scenario)?;
            let log = run_arm(&s, protocol.map_or(s.protocol, Into::into), seed.unwrap_or(s.seed))?;
            let stats = metrics::write_metrics(&log, &out)?;
            print!("{}", metrics::render_summary(&[stats]));
        }
        Command::Compare { scenario, out, seed, seeds } => {
            let s = load_scenario(&scenario)?;
            let logs = compare(&s, seed.unwrap_or(s.seed), seeds)?;
            let stats = metrics::write_comparison(&logs, &out)?;
            print!("{}", metrics::render_summary(&stats));
        }
        Command::Golden => golden(),
    }
    Ok(())
}

fn golden() {
    let w = fixture::worked_example();
    let a = &w.assessment;
    println!("elp,d_m,received,expected,p_pct,f_per_m,proj_pct");
    for n in &a.neighbors {
        println!(
            "{},{:.0},{},{},{:.2},{:.4},{:.2}",
            n.elp, n.d_m, n.received, n.expected, n.p_pct, n.f_per_m, n.proj_pct
        );
    }
    debug_assert_eq!(a.neighbors.len(), NEIGHBORS.len());
    println!();
    println!("F = {:.5}", a.fault_per_m);
    println!("S = {:.3}", a.success_pct);
    println!(
        "MaxBP = {}  MinBP = {}  MaMP = {}  MiMP = {}",
        a.max_bp_dbm, a.min_bp_dbm, a.ma_mp_dbm, a.mi_mp_dbm
    );
    println!("PD = {}", w.decision.pd_dbm);
    println!("PowU = {:.4} dBm ({})", w.decision.pow_u_dbm, w.decision.branch.as_str());
}
