//! File formats, metrics output and the `bpcsim` runner on top of `bpc-core`.

pub mod metrics;
pub mod runner;
pub mod scenario_file;

pub use metrics::{write_comparison, write_metrics, SummaryStats};
pub use runner::{compare, load_scenario, run_arm};
pub use scenario_file::{parse_scenario, render_scenario, ParseError, ParseErrors};
