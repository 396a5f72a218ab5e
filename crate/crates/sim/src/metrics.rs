//! CSV output and run summaries.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use bpc_core::MetricsLog;

pub const ROWS_HEADER: &str = "t_s,elp,pow_u_dbm,s_pct,f_per_m,neighbors,sent,received,collided,busy_ratio";
pub const SUMMARY_HEADER: &str = "protocol,seed,mean_delivery,mean_busy,mean_pow_u,convergence_s";

/// Fleet-mean power must move less than this between seconds to count as
/// settled.
pub const CONVERGENCE_DELTA_DBM: f64 = 0.1;
/// Consecutive settled seconds required.
pub const CONVERGENCE_RUN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    fn of(values: impl IntoIterator<Item = f64>) -> Spread {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            n += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        if n == 0 {
            return Spread::default();
        }
        Spread { mean: sum / n as f64, min, max }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub protocol: String,
    pub seed: u64,
    /// Over vehicle-seconds that had at least one in-range reception.
    pub delivery: Spread,
    pub busy: Spread,
    pub pow_u: Spread,
    /// Fleet-mean power per second, starting at t = 1 s.
    pub fleet_mean_pow_u: Vec<f64>,
    pub convergence_s: Option<u32>,
}

impl SummaryStats {
    pub fn from_log(log: &MetricsLog) -> Self {
        let fleet_mean_pow_u = fleet_mean_power(log);
        SummaryStats {
            protocol: log.protocol.to_owned(),
            seed: log.seed,
            delivery: Spread::of(log.rows.iter().filter_map(|r| r.delivery_ratio())),
            busy: Spread::of(log.rows.iter().map(|r| r.busy_ratio)),
            pow_u: Spread::of(log.rows.iter().map(|r| r.pow_u_dbm)),
            convergence_s: convergence_second(&fleet_mean_pow_u),
            fleet_mean_pow_u,
        }
    }

    /// Fleet-mean power in the last logged second.
    pub fn final_mean_pow_u(&self) -> Option<f64> {
        self.fleet_mean_pow_u.last().copied()
    }

    pub fn loss_ratio(&self) -> f64 {
        1.0 - self.delivery.mean
    }
}

fn fleet_mean_power(log: &MetricsLog) -> Vec<f64> {
    let mut sums = vec![(0.0, 0usize); log.duration_s as usize];
    for r in &log.rows {
        if let Some(slot) = sums.get_mut(r.t_s as usize - 1) {
            slot.0 += r.pow_u_dbm;
            slot.1 += 1;
        }
    }
    sums.into_iter().filter(|(_, n)| *n > 0).map(|(s, n)| s / n as f64).collect()
}

/// First second `s` after which the series moves by less than
/// [`CONVERGENCE_DELTA_DBM`] for [`CONVERGENCE_RUN`] consecutive seconds.
/// `series[0]` is second 1.
pub fn convergence_second(series: &[f64]) -> Option<u32> {
    let steady: Vec<bool> =
        series.windows(2).map(|w| (w[1] - w[0]).abs() < CONVERGENCE_DELTA_DBM).collect();
    steady
        .windows(CONVERGENCE_RUN)
        .position(|w| w.iter().all(|&b| b))
        .map(|i| i as u32 + 1)
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.map(|x| format!("{x:.decimals$}")).unwrap_or_default()
}

pub fn render_rows(log: &MetricsLog) -> String {
    let mut out = String::with_capacity(64 * (log.rows.len() + 1));
    out.push_str(ROWS_HEADER);
    out.push('\n');
    for r in &log.rows {
        let _ = writeln!(
            out,
            "{},{},{:.2},{},{},{},{},{},{},{:.4}",
            r.t_s,
            r.elp,
            r.pow_u_dbm,
            opt(r.s_pct, 2),
            opt(r.f_per_m, 4),
            r.neighbors,
            r.sent,
            r.received,
            r.collided,
            r.busy_ratio,
        );
    }
    out
}

pub fn render_summary(stats: &[SummaryStats]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for s in stats {
        let _ = writeln!(
            out,
            "{},{},{:.4},{:.4},{:.2},{}",
            s.protocol,
            s.seed,
            s.delivery.mean,
            s.busy.mean,
            s.pow_u.mean,
            s.convergence_s.map(|c| c.to_string()).unwrap_or_default(),
        );
    }
    out
}

/// Writes `metrics.csv` and `summary.csv` into `dir`, creating it if needed.
pub fn write_metrics(log: &MetricsLog, dir: &Path) -> io::Result<SummaryStats> {
    fs::create_dir_all(dir)?;
    let stats = SummaryStats::from_log(log);
    fs::write(dir.join("metrics.csv"), render_rows(log))?;
    fs::write(dir.join("summary.csv"), render_summary(std::slice::from_ref(&stats)))?;
    Ok(stats)
}

/// Writes one `metrics_<protocol>_seed<seed>.csv` per log and a joined
/// `summary.csv`.
pub fn write_comparison(logs: &[MetricsLog], dir: &Path) -> io::Result<Vec<SummaryStats>> {
    fs::create_dir_all(dir)?;
    let mut stats = Vec::with_capacity(logs.len());
    for log in logs {
        let name = format!("metrics_{}_seed{}.csv", log.protocol, log.seed);
        fs::write(dir.join(name), render_rows(log))?;
        stats.push(SummaryStats::from_log(log));
    }
    fs::write(dir.join("summary.csv"), render_summary(&stats))?;
    Ok(stats)
}
