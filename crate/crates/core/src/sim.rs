//! Slotted, seeded simulation of a beaconing vehicle fleet.
//!
//! Time advances in integer-millisecond slots. Each beacon interval is an
//! aligned period carrying exactly one beacon per vehicle, sent in the slot
//! `(base offset + jitter) mod interval`; with `access_jitter_ms = 0` every
//! vehicle beacons at a fixed phase. Each vehicle's one-second timer fires at
//! a vehicle-specific multiple of the interval, so a window always spans
//! whole beacon periods.
//!
//! Per slot the engine moves vehicles, emits due beacons through the codec,
//! resolves the slot on a [`Medium`], feeds delivered beacons into the
//! receivers' neighbor tables, and at timer ticks turns the closed window into
//! a power decision that applies from the next beacon on.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beacon::{decode_beacon, encode_beacon, next_sequence, Beacon, Elp, BEACON_LEN};
use crate::channel::{
    is_covered, resolve_slot, ChannelError, NodeId, Outcome, PathLossModel, Reception, Receiver,
    Transmission,
};
use crate::neighbor::{ChannelAssessment, NeighborTable};
use crate::power::{decide_power, fixed_power_baseline, PowerConfig, PowerDecision};
use crate::{Position, DEFAULT_BEACON_INTERVAL_MS, WINDOW_MS};

/// Lateral distance between adjacent lanes, meters.
pub const LANE_WIDTH_M: f64 = 3.5;

/// Heading of vehicles driving along +x (east).
const EAST_DEG: f64 = 90.0;

/// Largest supported road, kept well inside the beacon position encoding.
const MAX_ROAD_LENGTH_M: f64 = 1.0e7;

const LAYOUT_STREAM: u64 = 0;
const ACCESS_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    Bpc,
    Fixed,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Bpc => "bpc",
            Protocol::Fixed => "fixed",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Protocol {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bpc" => Ok(Protocol::Bpc),
            "fixed" => Ok(Protocol::Fixed),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub reason: &'static str,
}

/// Every constraint a scenario broke.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid scenario:")?;
        for v in &self.violations {
            write!(f, " {}: {};", v.field, v.reason)?;
        }
        Ok(())
    }
}

impl core::error::Error for ScenarioError {}

/// Simulation input: a straight multi-lane road with evenly spaced vehicles.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub road_length_m: f64,
    pub lanes: u32,
    pub vehicles: u32,
    pub spacing_m: f64,
    pub speed_mps: f64,
    /// Per-vehicle speed is drawn from `speed_mps +/- speed_jitter_mps`.
    pub speed_jitter_mps: f64,
    pub duration_s: u32,
    pub beacon_interval_ms: u16,
    pub slot_ms: u16,
    /// Width of the per-period random shift of each beacon's slot.
    pub access_jitter_ms: u16,
    pub seed: u64,
    pub protocol: Protocol,
    pub path_loss_exponent: f64,
    pub power: PowerConfig,
    /// BPC vehicles start at `initial_power_dbm - U[0, spread)`.
    pub initial_power_spread_dbm: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            road_length_m: 5000.0,
            lanes: 1,
            vehicles: 1,
            spacing_m: 10.0,
            speed_mps: 25.0,
            speed_jitter_mps: 0.0,
            duration_s: 10,
            beacon_interval_ms: DEFAULT_BEACON_INTERVAL_MS,
            slot_ms: 1,
            access_jitter_ms: 0,
            seed: 0,
            protocol: Protocol::Bpc,
            path_loss_exponent: 2.5,
            power: PowerConfig::default(),
            initial_power_spread_dbm: 0.0,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut violations = Vec::new();
        let mut check = |ok: bool, field, reason| {
            if !ok {
                violations.push(Violation { field, reason });
            }
        };

        check(self.vehicles >= 1, "vehicles", "must be at least 1");
        check(self.lanes >= 1, "lanes", "must be at least 1");
        check(self.spacing_m.is_finite() && self.spacing_m > 0.0, "spacing_m", "must be positive");
        check(
            self.road_length_m.is_finite() && self.road_length_m > 0.0 && self.road_length_m <= MAX_ROAD_LENGTH_M,
            "road_length_m",
            "must lie in (0, 1e7]",
        );
        if self.lanes >= 1 && self.spacing_m > 0.0 {
            let per_lane = self.vehicles.div_ceil(self.lanes) as f64;
            check(per_lane * self.spacing_m <= self.road_length_m, "road_length_m", "too short for the platoon");
        }
        check(self.speed_mps.is_finite() && self.speed_mps >= 0.0, "speed_mps", "must be non-negative");
        check(
            self.speed_jitter_mps.is_finite() && self.speed_jitter_mps >= 0.0,
            "speed_jitter_mps",
            "must be non-negative",
        );
        check(self.duration_s > 1, "duration_s", "must exceed 1 second");
        check(
            self.beacon_interval_ms > 0 && WINDOW_MS.is_multiple_of(u64::from(self.beacon_interval_ms)),
            "beacon_interval_ms",
            "must divide 1000",
        );
        check(
            self.slot_ms > 0 && self.beacon_interval_ms.is_multiple_of(self.slot_ms.max(1)),
            "slot_ms",
            "must divide beacon_interval_ms",
        );
        check(
            self.access_jitter_ms <= self.beacon_interval_ms,
            "access_jitter_ms",
            "must not exceed beacon_interval_ms",
        );
        check(
            self.path_loss_exponent.is_finite() && self.path_loss_exponent > 1.0,
            "path_loss_exponent",
            "must exceed 1",
        );
        check(
            self.initial_power_spread_dbm.is_finite() && self.initial_power_spread_dbm >= 0.0,
            "initial_power_spread_dbm",
            "must be non-negative",
        );
        if let Err(e) = self.power.validate() {
            let reason = match e {
                crate::power::PowerError::InvalidConfig(r) => r,
                _ => "invalid",
            };
            check(false, "power", reason);
        }

        if violations.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError { violations })
        }
    }

    fn settings(&self) -> EngineSettings {
        EngineSettings {
            road_length_m: self.road_length_m,
            beacon_interval_ms: self.beacon_interval_ms,
            slot_ms: self.slot_ms,
            access_jitter_ms: self.access_jitter_ms,
            duration_s: self.duration_s,
            seed: self.seed,
            label: self.protocol.as_str(),
        }
    }
}

/// Engine parameters independent of how vehicles are laid out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineSettings {
    /// Vehicles wrap around to x = 0 past this point.
    pub road_length_m: f64,
    pub beacon_interval_ms: u16,
    pub slot_ms: u16,
    pub access_jitter_ms: u16,
    pub duration_s: u32,
    pub seed: u64,
    /// Protocol label carried into the metrics log.
    pub label: &'static str,
}

impl EngineSettings {
    fn slots_per_interval(&self) -> u64 {
        u64::from(self.beacon_interval_ms / self.slot_ms)
    }
}

/// Initial state of one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleSpec {
    pub elp: Elp,
    pub position: Position,
    pub speed_mps: f64,
    pub dir_deg: f64,
    pub protocol: Protocol,
    pub power: PowerConfig,
    pub initial: PowerDecision,
    pub initial_seq: u16,
    /// Slot of the beacon within each interval (before jitter).
    pub beacon_offset_slots: u64,
    /// Timer phase, a multiple of the beacon interval in `[0, 1000)`.
    pub assess_phase_ms: u64,
}

/// Moves beacons from transmitters to receivers.
pub trait Medium {
    fn resolve(
        &mut self,
        now_ms: u64,
        transmissions: &[Transmission],
        receivers: &[Receiver],
    ) -> Result<Vec<Reception>, ChannelError>;

    /// Whether `node` senses any other transmission in this slot.
    fn is_busy(&self, transmissions: &[Transmission], node: &Receiver) -> Result<bool, ChannelError>;
}

/// The unit-disc medium of [`crate::channel`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiscMedium {
    pub model: PathLossModel,
}

impl Medium for DiscMedium {
    fn resolve(
        &mut self,
        _now_ms: u64,
        transmissions: &[Transmission],
        receivers: &[Receiver],
    ) -> Result<Vec<Reception>, ChannelError> {
        resolve_slot(transmissions, receivers, &self.model)
    }

    fn is_busy(&self, transmissions: &[Transmission], node: &Receiver) -> Result<bool, ChannelError> {
        is_covered(transmissions, node, &self.model)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counters {
    sent: u32,
    received: u32,
    collided: u32,
    busy_slots: u32,
}

/// Live state of one simulated vehicle.
#[derive(Debug, Clone)]
pub struct Vehicle {
    spec: VehicleSpec,
    position: Position,
    decision: PowerDecision,
    table: NeighborTable,
    seq: u16,
    window_open: bool,
    next_tx_ms: Option<u64>,
    last_assessment: Option<ChannelAssessment>,
    counters: Counters,
}

impl Vehicle {
    fn new(spec: VehicleSpec) -> Self {
        Self {
            position: spec.position,
            decision: spec.initial,
            table: NeighborTable::new(),
            seq: spec.initial_seq,
            window_open: false,
            next_tx_ms: None,
            last_assessment: None,
            counters: Counters::default(),
            spec,
        }
    }

    pub fn elp(&self) -> Elp {
        self.spec.elp
    }

    pub fn spec(&self) -> &VehicleSpec {
        &self.spec
    }

    pub fn position(&self) -> Position {
        self.position
    }

    pub fn decision(&self) -> &PowerDecision {
        &self.decision
    }

    pub fn neighbors(&self) -> &NeighborTable {
        &self.table
    }

    /// Assessment from the most recent timer tick, if it had neighbors.
    pub fn last_assessment(&self) -> Option<&ChannelAssessment> {
        self.last_assessment.as_ref()
    }

    fn position_at(&self, now_ms: u64, road_length_m: f64) -> Position {
        let start = self.spec.position;
        if self.spec.speed_mps == 0.0 {
            return start;
        }
        let x = start.x + self.spec.speed_mps * (now_ms as f64 / 1000.0);
        let mut wrapped = libm::fmod(x, road_length_m);
        if wrapped < 0.0 {
            wrapped += road_length_m;
        }
        Position::new(wrapped, start.y)
    }

    fn tick_timer(&mut self, now_ms: u64) {
        if !self.window_open {
            self.table.clear_window();
            self.window_open = true;
            return;
        }
        let assessment = self.table.assess_channel(now_ms).ok();
        self.decision = match self.spec.protocol {
            Protocol::Bpc => decide_power(assessment.as_ref(), &self.decision, &self.spec.power),
            Protocol::Fixed => {
                let mut d = fixed_power_baseline(&self.spec.power);
                match &assessment {
                    Some(a) => {
                        d.advertise_max_p_dbm = a.max_bp_dbm;
                        d.advertise_min_p_dbm = a.min_bp_dbm;
                    }
                    None => {
                        d.advertise_max_p_dbm = self.decision.advertise_max_p_dbm;
                        d.advertise_min_p_dbm = self.decision.advertise_min_p_dbm;
                    }
                }
                d
            }
        };
        self.last_assessment = assessment;
    }

    fn beacon(&self, now_ms: u64, interval_ms: u16) -> Beacon {
        Beacon {
            seq: self.seq,
            interval_ms,
            timestamp_ms: now_ms as u32,
            elp: self.spec.elp,
            pos_x_m: self.position.x,
            pos_y_m: self.position.y,
            speed_mps: self.spec.speed_mps,
            dir_deg: self.spec.dir_deg,
            max_p_dbm: self.decision.advertise_max_p_dbm,
            min_p_dbm: self.decision.advertise_min_p_dbm,
            pow_u_dbm: self.decision.pow_u_dbm,
        }
    }
}

/// One vehicle's metrics for one completed second.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondRow {
    pub t_s: u32,
    pub elp: Elp,
    pub pow_u_dbm: f64,
    /// `None` when the latest assessment had no live neighbors.
    pub s_pct: Option<f64>,
    pub f_per_m: Option<f64>,
    pub neighbors: u32,
    pub sent: u32,
    pub received: u32,
    pub collided: u32,
    pub busy_ratio: f64,
}

impl SecondRow {
    /// Fraction of in-range receptions that survived, if any were in range.
    pub fn delivery_ratio(&self) -> Option<f64> {
        let attempted = self.received + self.collided;
        (attempted > 0).then(|| f64::from(self.received) / f64::from(attempted))
    }
}

/// Whole-run counters. Every (transmission, other vehicle) pair ends up in
/// exactly one of delivered, collided, out_of_range or half_duplex.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunTotals {
    pub sent: u64,
    pub delivered: u64,
    pub collided: u64,
    pub out_of_range: u64,
    /// Pairs lost because the would-be receiver was transmitting itself.
    pub half_duplex: u64,
    pub pairs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLog {
    pub protocol: &'static str,
    pub seed: u64,
    pub duration_s: u32,
    pub rows: Vec<SecondRow>,
    pub totals: RunTotals,
}

pub struct Simulation<M: Medium = DiscMedium> {
    settings: EngineSettings,
    vehicles: Vec<Vehicle>,
    medium: M,
    access_rng: ChaCha8Rng,
    now_ms: u64,
    rows: Vec<SecondRow>,
    totals: RunTotals,
}

impl Simulation<DiscMedium> {
    /// Lays out the scenario's fleet. Identical scenarios give identical
    /// simulations.
    pub fn init(scenario: &Scenario) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let settings = scenario.settings();
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        rng.set_stream(LAYOUT_STREAM);

        let n = scenario.vehicles as usize;
        let spi = settings.slots_per_interval() as usize;
        let perm = rand::seq::index::sample(&mut rng, spi, spi).into_vec();
        let windows = (WINDOW_MS / u64::from(scenario.beacon_interval_ms)) as u32;

        let mut specs = Vec::with_capacity(n);
        for i in 0..n {
            let phase_idx = rng.random_range(0..windows);
            let speed_u: f64 = rng.random_range(-1.0..=1.0);
            let power_u: f64 = rng.random();

            let lanes = scenario.lanes as usize;
            let position = Position::new((i / lanes) as f64 * scenario.spacing_m, (i % lanes) as f64 * LANE_WIDTH_M);
            let speed = (scenario.speed_mps + speed_u * scenario.speed_jitter_mps).max(0.0);
            let initial = match scenario.protocol {
                Protocol::Bpc => {
                    let p = scenario.power.initial_power_dbm - power_u * scenario.initial_power_spread_dbm;
                    PowerDecision::holding(p.max(0.0))
                }
                Protocol::Fixed => fixed_power_baseline(&scenario.power),
            };
            specs.push(VehicleSpec {
                elp: Elp::for_vehicle(i as u32),
                position,
                speed_mps: speed,
                dir_deg: EAST_DEG,
                protocol: scenario.protocol,
                power: scenario.power,
                initial,
                initial_seq: 0,
                beacon_offset_slots: perm[i % spi] as u64,
                assess_phase_ms: u64::from(phase_idx) * u64::from(scenario.beacon_interval_ms),
            });
        }

        let medium = DiscMedium { model: PathLossModel::with_exponent(scenario.path_loss_exponent) };
        Ok(Simulation::with_vehicles(settings, specs, medium))
    }
}

impl<M: Medium> Simulation<M> {
    /// Builds a simulation from explicit vehicles and medium. `NodeId(i)` is
    /// the `i`th vehicle.
    pub fn with_vehicles(settings: EngineSettings, specs: Vec<VehicleSpec>, medium: M) -> Self {
        let mut access_rng = ChaCha8Rng::seed_from_u64(settings.seed);
        access_rng.set_stream(ACCESS_STREAM);
        Self {
            settings,
            vehicles: specs.into_iter().map(Vehicle::new).collect(),
            medium,
            access_rng,
            now_ms: 0,
            rows: Vec::new(),
            totals: RunTotals::default(),
        }
    }

    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn rows(&self) -> &[SecondRow] {
        &self.rows
    }

    pub fn totals(&self) -> RunTotals {
        self.totals
    }

    pub fn is_finished(&self) -> bool {
        self.now_ms >= u64::from(self.settings.duration_s) * WINDOW_MS
    }

    /// Advances one slot.
    pub fn step(&mut self) {
        let t = self.now_ms;
        let slot = u64::from(self.settings.slot_ms);
        let interval = u64::from(self.settings.beacon_interval_ms);
        let road = self.settings.road_length_m;

        for v in &mut self.vehicles {
            v.position = v.position_at(t, road);
            if t % WINDOW_MS == v.spec.assess_phase_ms {
                v.tick_timer(t);
            }
        }

        if t.is_multiple_of(interval) {
            let spi = self.settings.slots_per_interval();
            let jitter_slots = u64::from(self.settings.access_jitter_ms) / slot;
            for v in &mut self.vehicles {
                let jitter = if jitter_slots > 0 { self.access_rng.random_range(0..jitter_slots) } else { 0 };
                let offset = (v.spec.beacon_offset_slots + jitter) % spi;
                v.next_tx_ms = Some(t + offset * slot);
            }
        }

        let mut transmissions = Vec::new();
        let mut frames: Vec<[u8; BEACON_LEN]> = Vec::new();
        let mut transmitting = vec![false; self.vehicles.len()];
        for (i, v) in self.vehicles.iter_mut().enumerate() {
            if v.next_tx_ms != Some(t) {
                continue;
            }
            v.next_tx_ms = None;
            let beacon = v.beacon(t, self.settings.beacon_interval_ms);
            // Vehicle state always satisfies the beacon invariants.
            let frame = encode_beacon(&beacon).expect("vehicle state encodes");
            v.seq = next_sequence(v.seq);
            v.counters.sent += 1;
            transmitting[i] = true;
            frames.push(frame);
            transmissions.push(Transmission {
                sender: NodeId(i as u32),
                pos: v.position,
                power_dbm: v.decision.pow_u_dbm,
            });
        }

        let all: Vec<Receiver> = self
            .vehicles
            .iter()
            .enumerate()
            .map(|(i, v)| Receiver { id: NodeId(i as u32), pos: v.position })
            .collect();

        if !transmissions.is_empty() {
            let receivers: Vec<Receiver> =
                all.iter().copied().filter(|r| !transmitting[r.id.0 as usize]).collect();
            let others = self.vehicles.len() as u64 - 1;
            self.totals.sent += transmissions.len() as u64;
            self.totals.pairs += transmissions.len() as u64 * others;
            self.totals.half_duplex += transmissions.len() as u64 * (others - receivers.len() as u64);

            let outcomes = self
                .medium
                .resolve(t, &transmissions, &receivers)
                .expect("decided powers stay within [0, 33] dBm");
            for rec in outcomes {
                let rx = &mut self.vehicles[rec.receiver.0 as usize];
                match rec.outcome {
                    Outcome::Delivered => {
                        let k = transmissions.iter().position(|tx| tx.sender == rec.sender).expect("known sender");
                        let beacon = decode_beacon(&frames[k]).expect("encoder output decodes");
                        let own = rx.position;
                        rx.table.record_beacon(&beacon, own, t);
                        rx.counters.received += 1;
                        self.totals.delivered += 1;
                    }
                    Outcome::Collided => {
                        rx.counters.collided += 1;
                        self.totals.collided += 1;
                    }
                    Outcome::OutOfRange => self.totals.out_of_range += 1,
                }
            }

            for node in &all {
                if self.medium.is_busy(&transmissions, node).expect("valid powers") {
                    self.vehicles[node.id.0 as usize].counters.busy_slots += 1;
                }
            }
        }

        self.now_ms = t + slot;
        if self.now_ms.is_multiple_of(WINDOW_MS) {
            self.close_second();
        }
    }

    fn close_second(&mut self) {
        let t_s = (self.now_ms / WINDOW_MS) as u32;
        let slots_per_second = (WINDOW_MS / u64::from(self.settings.slot_ms)) as f64;
        for v in &mut self.vehicles {
            let c = core::mem::take(&mut v.counters);
            let a = v.last_assessment.as_ref();
            self.rows.push(SecondRow {
                t_s,
                elp: v.spec.elp,
                pow_u_dbm: v.decision.pow_u_dbm,
                s_pct: a.map(|a| a.success_pct),
                f_per_m: a.map(|a| a.fault_per_m),
                neighbors: a.map_or(0, |a| a.n as u32),
                sent: c.sent,
                received: c.received,
                collided: c.collided,
                busy_ratio: f64::from(c.busy_slots) / slots_per_second,
            });
        }
    }

    /// Runs to the configured duration and returns the log.
    pub fn run_to_end(mut self) -> MetricsLog {
        while !self.is_finished() {
            self.step();
        }
        MetricsLog {
            protocol: self.settings.label,
            seed: self.settings.seed,
            duration_s: self.settings.duration_s,
            rows: self.rows,
            totals: self.totals,
        }
    }
}

/// Runs a scenario start to finish.
pub fn run(scenario: &Scenario) -> Result<MetricsLog, ScenarioError> {
    Ok(Simulation::init(scenario)?.run_to_end())
}
