//! Beacon Power Control (BPC) for vehicular ad hoc networks.
//!
//! Every vehicle broadcasts a periodic safety beacon that piggybacks three
//! power fields (the largest and smallest transmit powers it has observed,
//! and the power it used itself). Receivers keep a per-neighbor record of
//! which sequence numbers arrived, how far away the sender is, and the
//! advertised powers. Once per second each vehicle turns that record into a
//! channel success estimate and picks the power for its next beacons.
//!
//! The crate is `no_std` (with `alloc`) and contains no IO:
//!
//! - [`beacon`]: the 48-byte beacon wire format and sequence arithmetic.
//! - [`neighbor`]: sequence list, distance table, active beacon list and the
//!   once-per-second [`ChannelAssessment`](neighbor::ChannelAssessment).
//! - [`power`]: the decision kernel mapping an assessment to a transmit power.
//! - [`channel`]: a deterministic unit-disc broadcast medium.
//! - [`sim`]: the slotted, seeded simulation loop and its metrics log.
//! - [`fixture`]: the replayable worked example (five neighbors around one
//!   receiver) used by tests and the `golden` command.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod beacon;
pub mod channel;
pub mod fixture;
pub mod neighbor;
pub mod power;
pub mod sim;

pub use beacon::{decode_beacon, encode_beacon, next_sequence, Beacon, CodecError, Elp, BEACON_LEN};
pub use channel::{
    busy_ratio, resolve_slot, ChannelError, NodeId, Outcome, PathLossModel, Reception, Receiver,
    Transmission,
};
pub use neighbor::{
    fail_rate, overall_fault, projected_reception, reception_percentage, success_percentage,
    ChannelAssessment, NeighborError, NeighborRecord, NeighborSummary, NeighborTable,
};
pub use power::{
    clear_channel_power, congested_power, decide_power, fixed_power_baseline, power_difference,
    Branch, PowerConfig, PowerDecision, PowerError,
};
pub use sim::{
    run, DiscMedium, Medium, MetricsLog, Protocol, RunTotals, Scenario, ScenarioError,
    SecondRow, Simulation, VehicleSpec,
};

/// Regulatory cap on on-board unit transmit power, dBm.
pub const MAX_POWER_DBM: f64 = 33.0;

/// Range reached at [`MAX_POWER_DBM`] under ideal conditions, meters.
pub const REFERENCE_RANGE_M: f64 = 300.0;

/// Length of one assessment window, milliseconds.
pub const WINDOW_MS: u64 = 1000;

/// Default beacon interval (10 Hz), milliseconds.
pub const DEFAULT_BEACON_INTERVAL_MS: u16 = 100;

/// A point in the scenario plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}
