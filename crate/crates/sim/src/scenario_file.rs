//! `key = value` scenario files.
//!
//! ```text
//! # 40 vehicles, 10 m apart
//! road_length_m = 5000
//! vehicles      = 40
//! spacing_m     = 10
//! duration_s    = 60
//! protocol      = bpc   # or fixed
//! ```
//!
//! Blank lines and `#` comments are ignored. Every problem in a file is
//! reported, each with its line number.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use bpc_core::{PowerConfig, Protocol, Scenario};
use thiserror::Error;

pub const REQUIRED_KEYS: [&str; 4] = ["road_length_m", "vehicles", "spacing_m", "duration_s"];

pub const OPTIONAL_KEYS: [&str; 13] = [
    "speed_mps",
    "beacon_interval_ms",
    "seed",
    "protocol",
    "path_loss_exponent",
    "congestion_gate_pct",
    "max_power_dbm",
    "lanes",
    "speed_jitter_mps",
    "slot_ms",
    "access_jitter_ms",
    "initial_power_dbm",
    "initial_power_spread_dbm",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}` (first set on line {first_line})")]
    DuplicateKey { line: usize, key: String, first_line: usize },
    #[error("line {line}: `{key}` has invalid value `{value}`")]
    InvalidValue { line: usize, key: String, value: String },
    #[error("line {line}: `{key}` out of range: {reason}")]
    OutOfRange { line: usize, key: String, reason: String },
    #[error("missing required key `{key}`")]
    MissingKey { key: String },
    #[error("invalid scenario: {reason}")]
    Invalid { key: String, reason: String },
}

/// All problems found in one scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseErrors(pub Vec<ParseError>);

impl std::error::Error for ParseErrors {}

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ParseErrors> {
    let mut errors = Vec::new();
    let mut entries: BTreeMap<&str, Entry> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(ParseError::Syntax { line });
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if !REQUIRED_KEYS.contains(&key) && !OPTIONAL_KEYS.contains(&key) {
            errors.push(ParseError::UnknownKey { line, key: key.to_owned() });
            continue;
        }
        if let Some(first) = entries.get(key) {
            errors.push(ParseError::DuplicateKey { line, key: key.to_owned(), first_line: first.line });
            continue;
        }
        entries.insert(key, Entry { line, value });
    }

    for key in REQUIRED_KEYS {
        if !entries.contains_key(key) {
            errors.push(ParseError::MissingKey { key: key.to_owned() });
        }
    }

    let mut s = Scenario::default();
    let read = |key: &str| entries.get(key).map(|e| (e.line, e.value));

    macro_rules! field {
        ($key:literal, $target:expr) => {
            if let Some((line, value)) = read($key) {
                match value.parse() {
                    Ok(v) => $target = v,
                    Err(_) => errors.push(ParseError::InvalidValue {
                        line,
                        key: $key.to_owned(),
                        value: value.to_owned(),
                    }),
                }
            }
        };
    }

    field!("road_length_m", s.road_length_m);
    field!("vehicles", s.vehicles);
    field!("spacing_m", s.spacing_m);
    field!("duration_s", s.duration_s);
    field!("speed_mps", s.speed_mps);
    field!("beacon_interval_ms", s.beacon_interval_ms);
    field!("seed", s.seed);
    field!("path_loss_exponent", s.path_loss_exponent);
    field!("congestion_gate_pct", s.power.congestion_gate_pct);
    field!("max_power_dbm", s.power.max_power_dbm);
    field!("lanes", s.lanes);
    field!("speed_jitter_mps", s.speed_jitter_mps);
    field!("slot_ms", s.slot_ms);
    field!("access_jitter_ms", s.access_jitter_ms);
    s.power.initial_power_dbm = s.power.max_power_dbm;
    field!("initial_power_dbm", s.power.initial_power_dbm);
    field!("initial_power_spread_dbm", s.initial_power_spread_dbm);
    if let Some((line, value)) = read("protocol") {
        match Protocol::from_str(value) {
            Ok(p) => s.protocol = p,
            Err(()) => errors.push(ParseError::InvalidValue {
                line,
                key: "protocol".to_owned(),
                value: value.to_owned(),
            }),
        }
    }

    // Range checks only make sense once every value parsed.
    if errors.is_empty() {
        if let Err(e) = s.validate() {
            for v in e.violations {
                // Power config reasons start with the offending key.
                let key = if v.field == "power" {
                    v.reason.split_whitespace().next().unwrap_or("power")
                } else {
                    v.field
                };
                let reason = v.reason.to_owned();
                match entries.get(key) {
                    Some(entry) => errors.push(ParseError::OutOfRange { line: entry.line, key: key.to_owned(), reason }),
                    None => errors.push(ParseError::Invalid { key: key.to_owned(), reason }),
                }
            }
        }
    }

    if errors.is_empty() {
        Ok(s)
    } else {
        Err(ParseErrors(errors))
    }
}

/// Canonical rendering; `parse_scenario(&render_scenario(s)) == Ok(s)` for
/// any valid scenario.
pub fn render_scenario(s: &Scenario) -> String {
    let PowerConfig { max_power_dbm, congestion_gate_pct, initial_power_dbm, .. } = s.power;
    let pairs: [(&str, String); 17] = [
        ("road_length_m", s.road_length_m.to_string()),
        ("vehicles", s.vehicles.to_string()),
        ("spacing_m", s.spacing_m.to_string()),
        ("duration_s", s.duration_s.to_string()),
        ("speed_mps", s.speed_mps.to_string()),
        ("beacon_interval_ms", s.beacon_interval_ms.to_string()),
        ("seed", s.seed.to_string()),
        ("protocol", s.protocol.to_string()),
        ("path_loss_exponent", s.path_loss_exponent.to_string()),
        ("congestion_gate_pct", congestion_gate_pct.to_string()),
        ("max_power_dbm", max_power_dbm.to_string()),
        ("lanes", s.lanes.to_string()),
        ("speed_jitter_mps", s.speed_jitter_mps.to_string()),
        ("slot_ms", s.slot_ms.to_string()),
        ("access_jitter_ms", s.access_jitter_ms.to_string()),
        ("initial_power_dbm", initial_power_dbm.to_string()),
        ("initial_power_spread_dbm", s.initial_power_spread_dbm.to_string()),
    ];
    let mut out = String::new();
    for (k, v) in pairs {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = "road_length_m = 1000\nvehicles = 5\nspacing_m = 15\nduration_s = 10\n";

    #[test]
    fn minimal_file_gets_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.vehicles, 5);
        assert_eq!(s.spacing_m, 15.0);
        assert_eq!(s.beacon_interval_ms, 100);
        assert_eq!(s.protocol, Protocol::Bpc);
        assert_eq!(s.power, PowerConfig::default());
        assert_eq!(s.path_loss_exponent, 2.5);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header\n\nroad_length_m = 1000   # trailing\nvehicles=5\n  spacing_m =15\nduration_s = 10\nprotocol = fixed\n";
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.protocol, Protocol::Fixed);
    }

    #[test]
    fn zero_vehicles_is_out_of_range() {
        let text = MINIMAL.replace("vehicles = 5", "vehicles=0");
        let errs = parse_scenario(&text).unwrap_err().0;
        assert!(errs.iter().any(|e| matches!(e, ParseError::OutOfRange { line: 2, key, .. } if key == "vehicles")), "{errs:?}");
    }

    #[test]
    fn duplicate_key() {
        let text = format!("{MINIMAL}vehicles = 6\n");
        let errs = parse_scenario(&text).unwrap_err().0;
        assert_eq!(errs, vec![ParseError::DuplicateKey { line: 5, key: "vehicles".into(), first_line: 2 }]);
    }

    #[test]
    fn reports_every_problem() {
        let text = "vehicles = lots\nbogus = 1\nno equals sign\nprotocol = fpav\n";
        let errs = parse_scenario(text).unwrap_err().0;
        assert!(errs.contains(&ParseError::UnknownKey { line: 2, key: "bogus".into() }));
        assert!(errs.contains(&ParseError::Syntax { line: 3 }));
        assert!(errs.contains(&ParseError::MissingKey { key: "road_length_m".into() }));
        assert!(errs.contains(&ParseError::MissingKey { key: "spacing_m".into() }));
        assert!(errs.contains(&ParseError::InvalidValue { line: 1, key: "vehicles".into(), value: "lots".into() }));
        assert!(errs.contains(&ParseError::InvalidValue { line: 4, key: "protocol".into(), value: "fpav".into() }));
    }

    #[test]
    fn cross_field_violations_carry_lines() {
        let text = format!("{MINIMAL}max_power_dbm = 40\nbeacon_interval_ms = 30\n");
        let errs = parse_scenario(&text).unwrap_err().0;
        assert!(errs.iter().any(|e| matches!(e, ParseError::OutOfRange { line: 5, key, .. } if key == "max_power_dbm")), "{errs:?}");
        assert!(errs.iter().any(|e| matches!(e, ParseError::OutOfRange { line: 6, key, .. } if key == "beacon_interval_ms")));
    }

    #[test]
    fn lower_cap_lowers_default_initial_power() {
        let s = parse_scenario(&format!("{MINIMAL}max_power_dbm = 20\n")).unwrap();
        assert_eq!(s.power.initial_power_dbm, 20.0);
    }

    prop_compose! {
        fn valid_scenario()(
            vehicles in 1u32..200,
            lanes in 1u32..4,
            spacing in 0.5f64..50.0,
            extra in 0.0f64..5000.0,
            speed in 0.0f64..40.0,
            jitter in 0.0f64..5.0,
            duration in 2u32..120,
            interval in prop::sample::select(vec![50u16, 100, 200, 250, 500, 1000]),
            seed in any::<u64>(),
            bpc in any::<bool>(),
            exponent in 1.01f64..5.0,
            gate in 0.0f64..100.0,
            cap in 1.0f64..=33.0,
            initial_frac in 0.0f64..=1.0,
            spread in 0.0f64..20.0,
            jitter_frac in 0.0f64..=1.0,
        ) -> Scenario {
            let per_lane = vehicles.div_ceil(lanes) as f64;
            Scenario {
                road_length_m: per_lane * spacing + extra,
                lanes,
                vehicles,
                spacing_m: spacing,
                speed_mps: speed,
                speed_jitter_mps: jitter,
                duration_s: duration,
                beacon_interval_ms: interval,
                slot_ms: 1,
                access_jitter_ms: (interval as f64 * jitter_frac) as u16,
                seed,
                protocol: if bpc { Protocol::Bpc } else { Protocol::Fixed },
                path_loss_exponent: exponent,
                power: PowerConfig {
                    max_power_dbm: cap,
                    congestion_gate_pct: gate,
                    initial_power_dbm: cap * initial_frac,
                    ..PowerConfig::default()
                },
                initial_power_spread_dbm: spread,
            }
        }
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(s in valid_scenario()) {
            prop_assert_eq!(parse_scenario(&render_scenario(&s)).unwrap(), s);
        }
    }
}
