//! Per-neighbor reception state and the once-per-second channel assessment.
//!
//! A [`NeighborTable`] fuses three views a receiver keeps about each sender:
//! the sequence numbers heard in the current window, the distance to the
//! sender, and the power fields from its latest beacon. When the one-second
//! timer fires, [`NeighborTable::assess_channel`] computes, per neighbor,
//!
//! - reception percentage `p = b / expected * 100`,
//! - fail rate `f = (100 - p) / d` (beacons lost per meter),
//! - projected reception one meter further out, `P = p - f`,
//!
//! and across neighbors the overall fault `F = mean(f)` and the channel
//! success percentage `S = 100 - (MaxD + MinD) / 2 * F`, clamped to
//! `[0, 100]`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use thiserror::Error;

use crate::beacon::{Beacon, Elp};
use crate::{Position, WINDOW_MS};

/// Smallest distance recorded for a neighbor (one codec position unit).
pub const MIN_DISTANCE_M: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NeighborError {
    #[error("window overflow: {received} beacons received but only {expected} expected")]
    WindowOverflow { received: u32, expected: u32 },
    #[error("expected beacon count must be positive")]
    NoExpectedBeacons,
    #[error("degenerate distance {0} m (must be positive)")]
    DegenerateDistance(f64),
    #[error("no live neighbors in the window")]
    NoNeighbors,
}

/// Beacons a sender with the given interval should deliver per window.
pub fn expected_per_window(interval_ms: u16) -> u32 {
    (WINDOW_MS / u64::from(interval_ms.max(1))).max(1) as u32
}

/// Reception percentage for a window: `received / expected * 100`.
pub fn reception_percentage(received: u32, expected: u32) -> Result<f64, NeighborError> {
    if expected == 0 {
        return Err(NeighborError::NoExpectedBeacons);
    }
    if received > expected {
        return Err(NeighborError::WindowOverflow { received, expected });
    }
    Ok(f64::from(received) / f64::from(expected) * 100.0)
}

/// Beacons lost per meter: `(100 - p) / d`.
pub fn fail_rate(p_pct: f64, d_m: f64) -> Result<f64, NeighborError> {
    if d_m.is_nan() || d_m <= 0.0 {
        return Err(NeighborError::DegenerateDistance(d_m));
    }
    Ok((100.0 - p_pct) / d_m)
}

/// Reception expected one meter further away, `p - f`, floored at zero.
pub fn projected_reception(p_pct: f64, f_per_m: f64) -> f64 {
    (p_pct - f_per_m).max(0.0)
}

/// Overall fault: the mean fail rate across neighbors.
pub fn overall_fault(fail_rates: &[f64]) -> Result<f64, NeighborError> {
    if fail_rates.is_empty() {
        return Err(NeighborError::NoNeighbors);
    }
    Ok(fail_rates.iter().sum::<f64>() / fail_rates.len() as f64)
}

/// Channel success percentage `100 - (max_d + min_d) / 2 * fault`, clamped
/// to `[0, 100]`.
pub fn success_percentage(fault_per_m: f64, max_d_m: f64, min_d_m: f64) -> f64 {
    debug_assert!(max_d_m >= min_d_m && min_d_m > 0.0 && fault_per_m >= 0.0);
    let s = 100.0 - (max_d_m + min_d_m) / 2.0 * fault_per_m;
    s.clamp(0.0, 100.0)
}

/// What a receiver knows about one sender.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborRecord {
    pub elp: Elp,
    /// Sequence numbers heard in the current window.
    pub seq_window: BTreeSet<u16>,
    /// Interval the sender declares in its beacons.
    pub interval_ms: u16,
    /// Distance at the last reception, meters.
    pub d_m: f64,
    /// Values from the most recent assessment.
    pub p_pct: f64,
    pub f_per_m: f64,
    pub proj_pct: f64,
    pub last_max_p_dbm: f64,
    pub last_min_p_dbm: f64,
    pub last_pow_u_dbm: f64,
    pub last_seen_ms: u64,
}

impl NeighborRecord {
    fn new(beacon: &Beacon, d_m: f64, now_ms: u64) -> Self {
        Self {
            elp: beacon.elp,
            seq_window: BTreeSet::new(),
            interval_ms: beacon.interval_ms,
            d_m,
            p_pct: 0.0,
            f_per_m: 0.0,
            proj_pct: 0.0,
            last_max_p_dbm: beacon.max_p_dbm,
            last_min_p_dbm: beacon.min_p_dbm,
            last_pow_u_dbm: beacon.pow_u_dbm,
            last_seen_ms: now_ms,
        }
    }

    /// Beacons received this window (`b`).
    pub fn received(&self) -> u32 {
        self.seq_window.len() as u32
    }

    pub fn expected(&self) -> u32 {
        expected_per_window(self.interval_ms)
    }
}

/// Per-neighbor values frozen into an assessment.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSummary {
    pub elp: Elp,
    pub received: u32,
    pub expected: u32,
    pub d_m: f64,
    pub p_pct: f64,
    pub f_per_m: f64,
    pub proj_pct: f64,
    pub pow_u_dbm: f64,
    pub max_p_dbm: f64,
    pub min_p_dbm: f64,
}

/// Snapshot produced each time the one-second timer fires.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelAssessment {
    /// Overall fault `F`, beacons lost per meter averaged over neighbors.
    pub fault_per_m: f64,
    /// Channel success `S`, percent in `[0, 100]`.
    pub success_pct: f64,
    pub n: usize,
    pub max_d_m: f64,
    pub min_d_m: f64,
    /// Largest and smallest `pow_u` among neighbors (MaxBP / MinBP).
    pub max_bp_dbm: f64,
    pub min_bp_dbm: f64,
    /// Largest and smallest advertised `max_p` among neighbors (MaMP / MiMP).
    pub ma_mp_dbm: f64,
    pub mi_mp_dbm: f64,
    /// Distance to the (nearest) neighbor transmitting at `max_bp_dbm`.
    pub d_max_sender_m: f64,
    pub window_end_ms: u64,
    /// Per-neighbor inputs, ordered by identity.
    pub neighbors: Vec<NeighborSummary>,
}

/// Sequence list, distance table and active beacon list of one vehicle.
#[derive(Debug, Clone, Default)]
pub struct NeighborTable {
    records: BTreeMap<Elp, NeighborRecord>,
}

impl NeighborTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, elp: &Elp) -> Option<&NeighborRecord> {
        self.records.get(elp)
    }

    pub fn records(&self) -> impl Iterator<Item = &NeighborRecord> {
        self.records.values()
    }

    /// Records a successfully received beacon.
    ///
    /// Re-recording a sequence number already heard this window is a no-op
    /// for the count; distance and power fields still take the latest values.
    pub fn record_beacon(&mut self, beacon: &Beacon, own_pos: Position, now_ms: u64) {
        debug_assert!(own_pos.is_finite());
        let d_m = own_pos.distance_to(&beacon.position()).max(MIN_DISTANCE_M);
        let rec = self
            .records
            .entry(beacon.elp)
            .or_insert_with(|| NeighborRecord::new(beacon, d_m, now_ms));
        rec.seq_window.insert(beacon.seq);
        rec.interval_ms = beacon.interval_ms;
        rec.d_m = d_m;
        rec.last_max_p_dbm = beacon.max_p_dbm;
        rec.last_min_p_dbm = beacon.min_p_dbm;
        rec.last_pow_u_dbm = beacon.pow_u_dbm;
        rec.last_seen_ms = now_ms;
    }

    /// Starts a fresh window: forgets every sequence number heard so far.
    pub fn clear_window(&mut self) {
        for rec in self.records.values_mut() {
            rec.seq_window.clear();
        }
    }

    /// Closes the current window and produces the channel assessment.
    ///
    /// Neighbors silent for the whole window are evicted first. Whatever the
    /// outcome, the window is cleared afterwards.
    pub fn assess_channel(&mut self, now_ms: u64) -> Result<ChannelAssessment, NeighborError> {
        self.records.retain(|_, rec| !rec.seq_window.is_empty());
        let result = self.compute(now_ms);
        self.clear_window();
        result
    }

    fn compute(&mut self, now_ms: u64) -> Result<ChannelAssessment, NeighborError> {
        if self.records.is_empty() {
            return Err(NeighborError::NoNeighbors);
        }

        let mut neighbors = Vec::with_capacity(self.records.len());
        for rec in self.records.values_mut() {
            let received = rec.received();
            let expected = rec.expected();
            let p = reception_percentage(received, expected)?;
            let f = fail_rate(p, rec.d_m)?;
            rec.p_pct = p;
            rec.f_per_m = f;
            rec.proj_pct = p - f;
            neighbors.push(NeighborSummary {
                elp: rec.elp,
                received,
                expected,
                d_m: rec.d_m,
                p_pct: p,
                f_per_m: f,
                proj_pct: rec.proj_pct,
                pow_u_dbm: rec.last_pow_u_dbm,
                max_p_dbm: rec.last_max_p_dbm,
                min_p_dbm: rec.last_min_p_dbm,
            });
        }

        let fail_rates: Vec<f64> = neighbors.iter().map(|n| n.f_per_m).collect();
        let fault = overall_fault(&fail_rates)?;

        let fold = |init: f64, pick: fn(&NeighborSummary) -> f64, cmp: fn(f64, f64) -> f64| {
            neighbors.iter().map(pick).fold(init, cmp)
        };
        let max_d = fold(f64::NEG_INFINITY, |n| n.d_m, f64::max);
        let min_d = fold(f64::INFINITY, |n| n.d_m, f64::min);
        let max_bp = fold(f64::NEG_INFINITY, |n| n.pow_u_dbm, f64::max);
        let min_bp = fold(f64::INFINITY, |n| n.pow_u_dbm, f64::min);
        let ma_mp = fold(f64::NEG_INFINITY, |n| n.max_p_dbm, f64::max);
        let mi_mp = fold(f64::INFINITY, |n| n.max_p_dbm, f64::min);
        let d_max_sender = neighbors
            .iter()
            .filter(|n| n.pow_u_dbm == max_bp)
            .map(|n| n.d_m)
            .fold(f64::INFINITY, f64::min);

        Ok(ChannelAssessment {
            fault_per_m: fault,
            success_pct: success_percentage(fault, max_d, min_d),
            n: neighbors.len(),
            max_d_m: max_d,
            min_d_m: min_d,
            max_bp_dbm: max_bp,
            min_bp_dbm: min_bp,
            ma_mp_dbm: ma_mp,
            mi_mp_dbm: mi_mp,
            d_max_sender_m: d_max_sender,
            window_end_ms: now_ms,
            neighbors,
        })
    }
}
