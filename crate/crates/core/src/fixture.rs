//! Replayable worked example: receiver `X` and five neighbors `A`..`E`.
//!
//! Each neighbor sends ten beacons in X's window; the listed sequence
//! numbers are lost. Distances and advertised power fields are fixed, so the
//! assessment and the next transmit power are known in closed form:
//! MaxBP 29, MinBP 25, MaMP 29, MiMP 26, PD 4 and PowU = 25 + 4 * S / 100.

use alloc::vec::Vec;

use crate::beacon::{Beacon, Elp};
use crate::channel::{ChannelError, NodeId, Outcome, Reception, Receiver, Transmission};
use crate::neighbor::{ChannelAssessment, NeighborTable};
use crate::power::{decide_power, PowerConfig, PowerDecision};
use crate::sim::{EngineSettings, Medium, Protocol, Simulation, VehicleSpec};
use crate::{Position, DEFAULT_BEACON_INTERVAL_MS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkedNeighbor {
    pub label: &'static str,
    pub position: Position,
    pub d_m: f64,
    pub first_seq: u16,
    /// Sequence numbers of the window that never arrive.
    pub missing: &'static [u16],
    pub max_p_dbm: f64,
    pub min_p_dbm: f64,
    pub pow_u_dbm: f64,
}

impl WorkedNeighbor {
    pub fn elp(&self) -> Elp {
        Elp::from_label(self.label)
    }

    /// Sequence numbers that do arrive in the window.
    pub fn received(&self) -> impl Iterator<Item = u16> + '_ {
        (self.first_seq..self.first_seq + WINDOW_BEACONS).filter(|s| !self.missing.contains(s))
    }
}

/// Beacons each neighbor sends per window.
pub const WINDOW_BEACONS: u16 = 10;

pub const RECEIVER_LABEL: &str = "X";
pub const RECEIVER_POSITION: Position = Position::new(50.0, 50.0);

pub const NEIGHBORS: [WorkedNeighbor; 5] = [
    WorkedNeighbor {
        label: "A",
        position: Position::new(63.0, 50.0),
        d_m: 13.0,
        first_seq: 15,
        missing: &[19, 22],
        max_p_dbm: 28.0,
        min_p_dbm: 24.0,
        pow_u_dbm: 25.0,
    },
    WorkedNeighbor {
        label: "B",
        position: Position::new(50.0, 68.0),
        d_m: 18.0,
        first_seq: 71,
        missing: &[73, 74, 76, 77],
        max_p_dbm: 29.0,
        min_p_dbm: 23.0,
        pow_u_dbm: 28.0,
    },
    WorkedNeighbor {
        label: "C",
        position: Position::new(27.0, 50.0),
        d_m: 23.0,
        first_seq: 89,
        missing: &[91, 92, 93, 94, 95, 98],
        max_p_dbm: 28.0,
        min_p_dbm: 24.0,
        pow_u_dbm: 29.0,
    },
    WorkedNeighbor {
        label: "D",
        position: Position::new(50.0, 32.0),
        d_m: 18.0,
        first_seq: 22,
        missing: &[28, 31],
        max_p_dbm: 27.0,
        min_p_dbm: 24.0,
        pow_u_dbm: 28.0,
    },
    WorkedNeighbor {
        label: "E",
        position: Position::new(65.0, 50.0),
        d_m: 15.0,
        first_seq: 61,
        missing: &[64, 65, 66, 68],
        max_p_dbm: 26.0,
        min_p_dbm: 23.0,
        pow_u_dbm: 28.0,
    },
];

fn beacon(n: &WorkedNeighbor, seq: u16) -> Beacon {
    Beacon {
        seq,
        interval_ms: DEFAULT_BEACON_INTERVAL_MS,
        timestamp_ms: 0,
        elp: n.elp(),
        pos_x_m: n.position.x,
        pos_y_m: n.position.y,
        speed_mps: 0.0,
        dir_deg: 0.0,
        max_p_dbm: n.max_p_dbm,
        min_p_dbm: n.min_p_dbm,
        pow_u_dbm: n.pow_u_dbm,
    }
}

/// X's neighbor table after one window of the example.
pub fn worked_example_table() -> NeighborTable {
    let mut table = NeighborTable::new();
    for n in &NEIGHBORS {
        for seq in n.received() {
            table.record_beacon(&beacon(n, seq), RECEIVER_POSITION, 0);
        }
    }
    table
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkedExample {
    pub assessment: ChannelAssessment,
    pub decision: PowerDecision,
}

/// Assessment and next power for X, with the default power config.
pub fn worked_example() -> WorkedExample {
    let cfg = PowerConfig::default();
    let assessment = worked_example_table()
        .assess_channel(1000)
        .expect("five live neighbors");
    let decision = decide_power(Some(&assessment), &PowerDecision::initial(&cfg), &cfg);
    WorkedExample { assessment, decision }
}

/// Delivers only to X, dropping the example's missing sequence numbers.
#[derive(Debug, Clone, Default)]
pub struct ScriptedMedium {
    sent: [u16; NEIGHBORS.len() + 1],
}

impl Medium for ScriptedMedium {
    fn resolve(
        &mut self,
        _now_ms: u64,
        transmissions: &[Transmission],
        receivers: &[Receiver],
    ) -> Result<Vec<Reception>, ChannelError> {
        let mut out = Vec::new();
        for tx in transmissions {
            let idx = tx.sender.0 as usize;
            let nth = self.sent[idx];
            self.sent[idx] = nth.saturating_add(1);
            for rx in receivers {
                let delivered = rx.id == NodeId(0)
                    && idx > 0
                    && !(nth < WINDOW_BEACONS && NEIGHBORS[idx - 1].missing.contains(&(NEIGHBORS[idx - 1].first_seq + nth)));
                let outcome = if delivered { Outcome::Delivered } else { Outcome::OutOfRange };
                out.push(Reception { sender: tx.sender, receiver: rx.id, outcome });
            }
        }
        Ok(out)
    }

    fn is_busy(&self, transmissions: &[Transmission], node: &Receiver) -> Result<bool, ChannelError> {
        Ok(transmissions.iter().any(|t| t.sender != node.id))
    }
}

/// Two-second simulation replaying the example: X (vehicle 0) runs BPC, the
/// five neighbors transmit at their fixed example powers. X's first window
/// closes at t = 1000 ms.
pub fn worked_example_simulation() -> Simulation<ScriptedMedium> {
    let settings = EngineSettings {
        road_length_m: 1000.0,
        beacon_interval_ms: DEFAULT_BEACON_INTERVAL_MS,
        slot_ms: 1,
        access_jitter_ms: 0,
        duration_s: 2,
        seed: 0,
        label: "bpc",
    };
    let bpc = PowerConfig::default();
    let mut specs = Vec::with_capacity(NEIGHBORS.len() + 1);
    specs.push(VehicleSpec {
        elp: Elp::from_label(RECEIVER_LABEL),
        position: RECEIVER_POSITION,
        speed_mps: 0.0,
        dir_deg: 0.0,
        protocol: Protocol::Bpc,
        power: bpc,
        initial: PowerDecision::initial(&bpc),
        initial_seq: 0,
        beacon_offset_slots: 0,
        assess_phase_ms: 0,
    });
    for (i, n) in NEIGHBORS.iter().enumerate() {
        let fixed = PowerConfig { max_power_dbm: n.pow_u_dbm, initial_power_dbm: n.pow_u_dbm, ..bpc };
        specs.push(VehicleSpec {
            elp: n.elp(),
            position: n.position,
            speed_mps: 0.0,
            dir_deg: 0.0,
            protocol: Protocol::Fixed,
            power: fixed,
            initial: PowerDecision {
                advertise_max_p_dbm: n.max_p_dbm,
                advertise_min_p_dbm: n.min_p_dbm,
                ..PowerDecision::holding(n.pow_u_dbm)
            },
            initial_seq: n.first_seq,
            beacon_offset_slots: i as u64 + 1,
            assess_phase_ms: 0,
        });
    }
    Simulation::with_vehicles(settings, specs, ScriptedMedium::default())
}
