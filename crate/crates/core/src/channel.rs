//! Unit-disc broadcast medium.
//!
//! Transmit power maps to a radio range through a log-distance path loss
//! law anchored at 33 dBm -> 300 m. A receiver strictly inside the range of
//! exactly one transmission in a slot gets it; inside two or more, it gets
//! none of them.

use alloc::vec::Vec;

use thiserror::Error;

use crate::{Position, MAX_POWER_DBM, REFERENCE_RANGE_M};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("transmit power {0} dBm outside [0, 33]")]
    InvalidPower(f64),
    #[error("busy ratio needs at least one slot")]
    EmptyWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    pub ref_power_dbm: f64,
    pub ref_range_m: f64,
    pub path_loss_exponent: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self { ref_power_dbm: MAX_POWER_DBM, ref_range_m: REFERENCE_RANGE_M, path_loss_exponent: 2.5 }
    }
}

impl PathLossModel {
    pub fn with_exponent(path_loss_exponent: f64) -> Self {
        Self { path_loss_exponent, ..Self::default() }
    }

    /// Range reached at `power_dbm`:
    /// `ref_range * 10^((p - ref_power) / (10 * exponent))`.
    pub fn range_for_power(&self, power_dbm: f64) -> Result<f64, ChannelError> {
        if !(0.0..=MAX_POWER_DBM).contains(&power_dbm) {
            return Err(ChannelError::InvalidPower(power_dbm));
        }
        let exp = (power_dbm - self.ref_power_dbm) / (10.0 * self.path_loss_exponent);
        Ok(self.ref_range_m * libm::pow(10.0, exp))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub sender: NodeId,
    pub pos: Position,
    pub power_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Receiver {
    pub id: NodeId,
    pub pos: Position,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Delivered,
    OutOfRange,
    Collided,
}

/// Fate of one transmission at one receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Reception {
    pub sender: NodeId,
    pub receiver: NodeId,
    pub outcome: Outcome,
}

fn ranges(transmissions: &[Transmission], model: &PathLossModel) -> Result<Vec<f64>, ChannelError> {
    transmissions.iter().map(|t| model.range_for_power(t.power_dbm)).collect()
}

/// Resolves one slot. Returns one [`Reception`] per (transmission, receiver)
/// pair, grouped by receiver in input order. Transmissions from a receiver
/// itself are skipped.
pub fn resolve_slot(
    transmissions: &[Transmission],
    receivers: &[Receiver],
    model: &PathLossModel,
) -> Result<Vec<Reception>, ChannelError> {
    let ranges = ranges(transmissions, model)?;
    let mut out = Vec::with_capacity(transmissions.len() * receivers.len());
    let mut covering = Vec::new();
    for rx in receivers {
        covering.clear();
        covering.extend(
            transmissions
                .iter()
                .zip(&ranges)
                .map(|(t, &r)| t.sender != rx.id && t.pos.distance_to(&rx.pos) < r),
        );
        let hits = covering.iter().filter(|&&c| c).count();
        for (t, &covers) in transmissions.iter().zip(&covering) {
            if t.sender == rx.id {
                continue;
            }
            let outcome = match (covers, hits) {
                (false, _) => Outcome::OutOfRange,
                (true, 1) => Outcome::Delivered,
                (true, _) => Outcome::Collided,
            };
            out.push(Reception { sender: t.sender, receiver: rx.id, outcome });
        }
    }
    Ok(out)
}

/// Whether any transmission other than the node's own covers its position.
pub fn is_covered(transmissions: &[Transmission], node: &Receiver, model: &PathLossModel) -> Result<bool, ChannelError> {
    for t in transmissions {
        if t.sender != node.id && t.pos.distance_to(&node.pos) < model.range_for_power(t.power_dbm)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Fraction of slots in `window` during which the node was covered by at
/// least one other transmission.
pub fn busy_ratio<S: AsRef<[Transmission]>>(
    window: &[S],
    node: &Receiver,
    model: &PathLossModel,
) -> Result<f64, ChannelError> {
    if window.is_empty() {
        return Err(ChannelError::EmptyWindow);
    }
    let mut busy = 0usize;
    for slot in window {
        if is_covered(slot.as_ref(), node, model)? {
            busy += 1;
        }
    }
    Ok(busy as f64 / window.len() as f64)
}
