//! Beacon message and its fixed 48-byte big-endian encoding.
//!
//! | offset | width | field          | encoding                       |
//! |-------:|------:|----------------|--------------------------------|
//! | 0      | 2     | seq            | low 12 bits, high 4 must be 0  |
//! | 2      | 2     | interval_ms    | u16, > 0                       |
//! | 4      | 4     | timestamp_ms   | u32                            |
//! | 8      | 8     | elp            | opaque bytes                   |
//! | 16     | 4     | pos_x          | i32, meters x 100              |
//! | 20     | 4     | pos_y          | i32, meters x 100              |
//! | 24     | 2     | speed          | u16, m/s x 100                 |
//! | 26     | 2     | dir            | u16, degrees x 10, < 3600      |
//! | 28     | 2     | max_p          | u16, dBm x 100, <= 3300        |
//! | 30     | 2     | min_p          | u16, dBm x 100, <= max_p       |
//! | 32     | 2     | pow_u          | u16, dBm x 100, <= 3300        |
//! | 34     | 14    | reserved       | zero                           |

use core::fmt;

use thiserror::Error;

use crate::{Position, MAX_POWER_DBM};

/// Encoded beacon length in bytes.
pub const BEACON_LEN: usize = 48;

/// Size of the sequence number space (12-bit 802.11 sequence subfield).
pub const SEQ_MODULUS: u16 = 4096;

const OFF_SEQ: usize = 0;
const OFF_INTERVAL: usize = 2;
const OFF_TIMESTAMP: usize = 4;
const OFF_ELP: usize = 8;
const OFF_POS_X: usize = 16;
const OFF_POS_Y: usize = 20;
const OFF_SPEED: usize = 24;
const OFF_DIR: usize = 26;
const OFF_MAX_P: usize = 28;
const OFF_MIN_P: usize = 30;
const OFF_POW_U: usize = 32;
const OFF_RESERVED: usize = 34;

const CENTI: f64 = 100.0;
const DECI: f64 = 10.0;
const MAX_POWER_CENTI: u16 = 3300;
const DIR_MODULUS_DECI: u16 = 3600;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("invalid beacon field `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: &'static str },
    #[error("beacon must be {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("corrupt beacon field `{field}`: {reason}")]
    Corrupt { field: &'static str, reason: &'static str },
}

/// Electronic License Plate: an opaque 8-byte sender identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Elp(pub [u8; 8]);

impl Elp {
    /// Builds an identity from a short label, zero-padded. Labels longer
    /// than eight bytes are truncated.
    pub fn from_label(label: &str) -> Self {
        let mut bytes = [0u8; 8];
        for (dst, src) in bytes.iter_mut().zip(label.bytes()) {
            *dst = src;
        }
        Elp(bytes)
    }

    /// Identity for the `index`th simulated vehicle, e.g. `V0007`.
    pub fn for_vehicle(index: u32) -> Self {
        let mut bytes = *b"V0000000";
        let mut n = index;
        // Seven decimal digits, right-aligned.
        for slot in bytes[1..].iter_mut().rev() {
            *slot = b'0' + (n % 10) as u8;
            n /= 10;
        }
        Elp(bytes)
    }
}

impl fmt::Display for Elp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let end = self.0.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
        let label = &self.0[..end];
        if !label.is_empty() && label.iter().all(|b| b.is_ascii_graphic()) {
            for &b in label {
                write!(f, "{}", b as char)?;
            }
        } else {
            for b in &self.0 {
                write!(f, "{b:02x}")?;
            }
        }
        Ok(())
    }
}

/// Periodic safety beacon with the piggybacked power fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beacon {
    pub seq: u16,
    pub interval_ms: u16,
    pub timestamp_ms: u32,
    pub elp: Elp,
    pub pos_x_m: f64,
    pub pos_y_m: f64,
    pub speed_mps: f64,
    /// Compass heading in degrees, `[0, 360)`.
    pub dir_deg: f64,
    /// Largest transmit power this sender observed among its neighbors.
    pub max_p_dbm: f64,
    /// Smallest transmit power this sender observed among its neighbors.
    pub min_p_dbm: f64,
    /// Power this beacon was sent with.
    pub pow_u_dbm: f64,
}

impl Beacon {
    pub fn position(&self) -> Position {
        Position::new(self.pos_x_m, self.pos_y_m)
    }

    /// Checks the value-level invariants (before fixed-point quantization).
    pub fn validate(&self) -> Result<(), CodecError> {
        let invalid = |field, reason| Err(CodecError::InvalidField { field, reason });
        if self.seq >= SEQ_MODULUS {
            return invalid("seq", "must be below 4096");
        }
        if self.interval_ms == 0 {
            return invalid("interval_ms", "must be positive");
        }
        for (field, v) in [("pos_x_m", self.pos_x_m), ("pos_y_m", self.pos_y_m)] {
            if !v.is_finite() {
                return invalid(field, "must be finite");
            }
        }
        if !(self.speed_mps.is_finite() && self.speed_mps >= 0.0) {
            return invalid("speed_mps", "must be finite and non-negative");
        }
        if !(self.dir_deg >= 0.0 && self.dir_deg < 360.0) {
            return invalid("dir_deg", "must lie in [0, 360)");
        }
        for (field, v) in [
            ("max_p_dbm", self.max_p_dbm),
            ("min_p_dbm", self.min_p_dbm),
            ("pow_u_dbm", self.pow_u_dbm),
        ] {
            if !(0.0..=MAX_POWER_DBM).contains(&v) {
                return invalid(field, "must lie in [0, 33] dBm");
            }
        }
        if self.min_p_dbm > self.max_p_dbm {
            return invalid("min_p_dbm", "exceeds max_p_dbm");
        }
        Ok(())
    }
}

fn to_fixed_i32(field: &'static str, v: f64, scale: f64) -> Result<i32, CodecError> {
    let q = libm::round(v * scale);
    if q < i32::MIN as f64 || q > i32::MAX as f64 {
        return Err(CodecError::InvalidField { field, reason: "out of encodable range" });
    }
    Ok(q as i32)
}

fn to_fixed_u16(field: &'static str, v: f64, scale: f64) -> Result<u16, CodecError> {
    let q = libm::round(v * scale);
    if q < 0.0 || q > u16::MAX as f64 {
        return Err(CodecError::InvalidField { field, reason: "out of encodable range" });
    }
    Ok(q as u16)
}

/// Encodes a beacon into its 48-byte wire form.
///
/// Real-valued fields are rounded to the codec resolution (0.01 m, 0.01 m/s,
/// 0.1 degree, 0.01 dBm). Headings that round up to 360.0 wrap to 0.
pub fn encode_beacon(b: &Beacon) -> Result<[u8; BEACON_LEN], CodecError> {
    b.validate()?;

    let pos_x = to_fixed_i32("pos_x_m", b.pos_x_m, CENTI)?;
    let pos_y = to_fixed_i32("pos_y_m", b.pos_y_m, CENTI)?;
    let speed = to_fixed_u16("speed_mps", b.speed_mps, CENTI)?;
    let dir = to_fixed_u16("dir_deg", b.dir_deg, DECI)? % DIR_MODULUS_DECI;
    let max_p = to_fixed_u16("max_p_dbm", b.max_p_dbm, CENTI)?;
    let min_p = to_fixed_u16("min_p_dbm", b.min_p_dbm, CENTI)?;
    let pow_u = to_fixed_u16("pow_u_dbm", b.pow_u_dbm, CENTI)?;
    // Two reals a hair apart can collapse onto the same grid step; only a
    // strict inversion after rounding is an error.
    if min_p > max_p {
        return Err(CodecError::InvalidField { field: "min_p_dbm", reason: "exceeds max_p_dbm" });
    }

    let mut out = [0u8; BEACON_LEN];
    out[OFF_SEQ..OFF_SEQ + 2].copy_from_slice(&b.seq.to_be_bytes());
    out[OFF_INTERVAL..OFF_INTERVAL + 2].copy_from_slice(&b.interval_ms.to_be_bytes());
    out[OFF_TIMESTAMP..OFF_TIMESTAMP + 4].copy_from_slice(&b.timestamp_ms.to_be_bytes());
    out[OFF_ELP..OFF_ELP + 8].copy_from_slice(&b.elp.0);
    out[OFF_POS_X..OFF_POS_X + 4].copy_from_slice(&pos_x.to_be_bytes());
    out[OFF_POS_Y..OFF_POS_Y + 4].copy_from_slice(&pos_y.to_be_bytes());
    out[OFF_SPEED..OFF_SPEED + 2].copy_from_slice(&speed.to_be_bytes());
    out[OFF_DIR..OFF_DIR + 2].copy_from_slice(&dir.to_be_bytes());
    out[OFF_MAX_P..OFF_MAX_P + 2].copy_from_slice(&max_p.to_be_bytes());
    out[OFF_MIN_P..OFF_MIN_P + 2].copy_from_slice(&min_p.to_be_bytes());
    out[OFF_POW_U..OFF_POW_U + 2].copy_from_slice(&pow_u.to_be_bytes());
    Ok(out)
}

fn read_u16(bytes: &[u8], off: usize) -> u16 {
    u16::from_be_bytes([bytes[off], bytes[off + 1]])
}

fn read_u32(bytes: &[u8], off: usize) -> u32 {
    u32::from_be_bytes([bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]])
}

fn read_i32(bytes: &[u8], off: usize) -> i32 {
    i32::from_be_bytes([bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]])
}

/// Decodes a 48-byte beacon, rejecting anything the encoder could not have
/// produced.
pub fn decode_beacon(bytes: &[u8]) -> Result<Beacon, CodecError> {
    if bytes.len() != BEACON_LEN {
        return Err(CodecError::Truncated { expected: BEACON_LEN, actual: bytes.len() });
    }
    let corrupt = |field, reason| Err(CodecError::Corrupt { field, reason });

    let seq = read_u16(bytes, OFF_SEQ);
    if seq >= SEQ_MODULUS {
        return corrupt("seq", "high bits set");
    }
    let interval_ms = read_u16(bytes, OFF_INTERVAL);
    if interval_ms == 0 {
        return corrupt("interval_ms", "zero interval");
    }
    let dir = read_u16(bytes, OFF_DIR);
    if dir >= DIR_MODULUS_DECI {
        return corrupt("dir_deg", "heading of 360 degrees or more");
    }
    let max_p = read_u16(bytes, OFF_MAX_P);
    let min_p = read_u16(bytes, OFF_MIN_P);
    let pow_u = read_u16(bytes, OFF_POW_U);
    for (field, v) in [("max_p_dbm", max_p), ("min_p_dbm", min_p), ("pow_u_dbm", pow_u)] {
        if v > MAX_POWER_CENTI {
            return corrupt(field, "power above 33 dBm");
        }
    }
    if min_p > max_p {
        return corrupt("min_p_dbm", "exceeds max_p_dbm");
    }
    if bytes[OFF_RESERVED..].iter().any(|&b| b != 0) {
        return corrupt("reserved", "non-zero reserved bytes");
    }

    let mut elp = [0u8; 8];
    elp.copy_from_slice(&bytes[OFF_ELP..OFF_ELP + 8]);

    Ok(Beacon {
        seq,
        interval_ms,
        timestamp_ms: read_u32(bytes, OFF_TIMESTAMP),
        elp: Elp(elp),
        pos_x_m: read_i32(bytes, OFF_POS_X) as f64 / CENTI,
        pos_y_m: read_i32(bytes, OFF_POS_Y) as f64 / CENTI,
        speed_mps: read_u16(bytes, OFF_SPEED) as f64 / CENTI,
        dir_deg: dir as f64 / DECI,
        max_p_dbm: max_p as f64 / CENTI,
        min_p_dbm: min_p as f64 / CENTI,
        pow_u_dbm: pow_u as f64 / CENTI,
    })
}

/// Successor in the 12-bit sequence space.
pub fn next_sequence(s: u16) -> u16 {
    debug_assert!(s < SEQ_MODULUS);
    (s + 1) % SEQ_MODULUS
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn abl_row_a() -> Beacon {
        Beacon {
            seq: 15,
            interval_ms: 50,
            timestamp_ms: 1020,
            elp: Elp::from_label("A"),
            pos_x_m: 13.0,
            pos_y_m: 0.0,
            speed_mps: 60.0,
            dir_deg: 90.0,
            max_p_dbm: 28.0,
            min_p_dbm: 24.0,
            pow_u_dbm: 25.0,
        }
    }

    fn zero_beacon() -> Beacon {
        Beacon {
            seq: 0,
            interval_ms: 1,
            timestamp_ms: 0,
            elp: Elp::default(),
            pos_x_m: 0.0,
            pos_y_m: 0.0,
            speed_mps: 0.0,
            dir_deg: 0.0,
            max_p_dbm: 0.0,
            min_p_dbm: 0.0,
            pow_u_dbm: 0.0,
        }
    }

    #[test]
    fn abl_first_row_round_trips() {
        let b = abl_row_a();
        let bytes = encode_beacon(&b).unwrap();
        assert_eq!(bytes.len(), BEACON_LEN);
        assert_eq!(decode_beacon(&bytes).unwrap(), b);
    }

    #[test]
    fn zero_beacon_is_valid() {
        let bytes = encode_beacon(&zero_beacon()).unwrap();
        assert_eq!(&bytes[..2], &[0, 0]);
        assert_eq!(decode_beacon(&bytes).unwrap(), zero_beacon());
    }

    #[test]
    fn inverted_power_span_is_rejected() {
        let b = Beacon { min_p_dbm: 30.0, max_p_dbm: 20.0, ..abl_row_a() };
        assert_eq!(
            encode_beacon(&b),
            Err(CodecError::InvalidField { field: "min_p_dbm", reason: "exceeds max_p_dbm" })
        );
    }

    #[test]
    fn out_of_range_fields_name_the_field() {
        let cases = [
            (Beacon { seq: 4096, ..abl_row_a() }, "seq"),
            (Beacon { interval_ms: 0, ..abl_row_a() }, "interval_ms"),
            (Beacon { pos_x_m: f64::NAN, ..abl_row_a() }, "pos_x_m"),
            (Beacon { speed_mps: -1.0, ..abl_row_a() }, "speed_mps"),
            (Beacon { dir_deg: 360.0, ..abl_row_a() }, "dir_deg"),
            (Beacon { pow_u_dbm: 33.5, ..abl_row_a() }, "pow_u_dbm"),
            (Beacon { pos_y_m: 3.0e7, ..abl_row_a() }, "pos_y_m"),
        ];
        for (b, name) in cases {
            match encode_beacon(&b) {
                Err(CodecError::InvalidField { field, .. }) => assert_eq!(field, name),
                other => panic!("{name}: expected invalid field, got {other:?}"),
            }
        }
    }

    #[test]
    fn short_input_is_truncation() {
        let bytes = encode_beacon(&abl_row_a()).unwrap();
        assert_eq!(
            decode_beacon(&bytes[..47]),
            Err(CodecError::Truncated { expected: 48, actual: 47 })
        );
    }

    #[test]
    fn patched_pow_u_is_corrupt() {
        let mut bytes = encode_beacon(&abl_row_a()).unwrap();
        // pow_u lives at bytes 32..34; 40 dBm is 4000 centi-dBm.
        bytes[32..34].copy_from_slice(&4000u16.to_be_bytes());
        assert_eq!(
            decode_beacon(&bytes),
            Err(CodecError::Corrupt { field: "pow_u_dbm", reason: "power above 33 dBm" })
        );
    }

    #[test]
    fn reserved_and_seq_high_bits_are_corrupt() {
        let good = encode_beacon(&abl_row_a()).unwrap();
        let mut bytes = good;
        bytes[47] = 1;
        assert!(matches!(decode_beacon(&bytes), Err(CodecError::Corrupt { field: "reserved", .. })));
        let mut bytes = good;
        bytes[0] |= 0x10;
        assert!(matches!(decode_beacon(&bytes), Err(CodecError::Corrupt { field: "seq", .. })));
    }

    #[test]
    fn heading_rounding_wraps() {
        let b = Beacon { dir_deg: 359.97, ..abl_row_a() };
        let decoded = decode_beacon(&encode_beacon(&b).unwrap()).unwrap();
        assert_eq!(decoded.dir_deg, 0.0);
    }

    #[test]
    fn sequence_successor() {
        assert_eq!(next_sequence(15), 16);
        assert_eq!(next_sequence(4095), 0);
        assert_eq!(next_sequence(0), 1);
    }

    #[test]
    fn elp_display() {
        assert_eq!(std::format!("{}", Elp::from_label("A")), "A");
        assert_eq!(std::format!("{}", Elp::for_vehicle(7)), "V0000007");
        assert_eq!(std::format!("{}", Elp([0xff; 8])), "ffffffffffffffff");
    }

    prop_compose! {
        fn on_grid_beacon()(
            seq in 0u16..4096,
            interval_ms in 1u16..=u16::MAX,
            timestamp_ms in any::<u32>(),
            elp in any::<[u8; 8]>(),
            x in any::<i32>(),
            y in any::<i32>(),
            speed in any::<u16>(),
            dir in 0u16..3600,
            p1 in 0u16..=3300,
            p2 in 0u16..=3300,
            pow in 0u16..=3300,
        ) -> Beacon {
            Beacon {
                seq,
                interval_ms,
                timestamp_ms,
                elp: Elp(elp),
                pos_x_m: x as f64 / 100.0,
                pos_y_m: y as f64 / 100.0,
                speed_mps: speed as f64 / 100.0,
                dir_deg: dir as f64 / 10.0,
                max_p_dbm: p1.max(p2) as f64 / 100.0,
                min_p_dbm: p1.min(p2) as f64 / 100.0,
                pow_u_dbm: pow as f64 / 100.0,
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(b in on_grid_beacon()) {
            let bytes = encode_beacon(&b).unwrap();
            prop_assert_eq!(decode_beacon(&bytes).unwrap(), b);
        }

        #[test]
        fn sequence_cycle_returns_home(s in 0u16..4096) {
            let mut cur = s;
            for _ in 0..4096 {
                cur = next_sequence(cur);
            }
            prop_assert_eq!(cur, s);
        }
    }
}
