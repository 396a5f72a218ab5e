//! Transmit power decisions.
//!
//! On a congested channel (`S < 100`) the next power is interpolated between
//! the weakest and strongest powers heard from neighbors:
//!
//! ```text
//! PD   = MaxBP - MinBP
//! PowU = MinBP + PD * S / 100
//! ```
//!
//! and is only adopted when it falls strictly between MiMP and MaMP. On a
//! clear channel (`S = 100`) the power is raised above MaxBP depending on how
//! far away the strongest sender is.

use thiserror::Error;

use crate::neighbor::ChannelAssessment;
use crate::MAX_POWER_DBM;

/// Tolerance for treating a success percentage as exactly 100.
pub const CLEAR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerError {
    #[error("inconsistent assessment: max power {max_bp} dBm below min power {min_bp} dBm")]
    InconsistentAssessment { max_bp: f64, min_bp: f64 },
    #[error("channel is not clear (S = {0}%)")]
    NotClear(f64),
    #[error("invalid power config: {0}")]
    InvalidConfig(&'static str),
}

/// Which rule produced a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Congested,
    ClearFar,
    ClearMid,
    ClearNear,
    Capped,
    Hold,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Congested => "congested",
            Branch::ClearFar => "clear_far",
            Branch::ClearMid => "clear_mid",
            Branch::ClearNear => "clear_near",
            Branch::Capped => "capped",
            Branch::Hold => "hold",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    pub max_power_dbm: f64,
    /// When positive, a congested channel with `S` at or above this value
    /// holds the previous power instead of adjusting. Zero disables it.
    pub congestion_gate_pct: f64,
    pub far_threshold_m: f64,
    pub mid_threshold_m: f64,
    pub initial_power_dbm: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            max_power_dbm: MAX_POWER_DBM,
            congestion_gate_pct: 0.0,
            far_threshold_m: 200.0,
            mid_threshold_m: 100.0,
            initial_power_dbm: MAX_POWER_DBM,
        }
    }
}

impl PowerConfig {
    pub fn validate(&self) -> Result<(), PowerError> {
        if !(self.max_power_dbm > 0.0 && self.max_power_dbm <= MAX_POWER_DBM) {
            return Err(PowerError::InvalidConfig("max_power_dbm must lie in (0, 33]"));
        }
        if !(self.mid_threshold_m > 0.0 && self.mid_threshold_m < self.far_threshold_m) {
            return Err(PowerError::InvalidConfig("thresholds must satisfy 0 < mid < far"));
        }
        if !(0.0..=100.0).contains(&self.congestion_gate_pct) {
            return Err(PowerError::InvalidConfig("congestion_gate_pct must lie in [0, 100]"));
        }
        if !(self.initial_power_dbm >= 0.0 && self.initial_power_dbm <= self.max_power_dbm) {
            return Err(PowerError::InvalidConfig("initial_power_dbm must lie in [0, max_power_dbm]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerDecision {
    pub pow_u_dbm: f64,
    pub branch: Branch,
    /// MaxP / MinP to advertise in outgoing beacons.
    pub advertise_max_p_dbm: f64,
    pub advertise_min_p_dbm: f64,
    pub pd_dbm: f64,
}

impl PowerDecision {
    /// Decision in force before any assessment exists.
    pub fn initial(cfg: &PowerConfig) -> Self {
        Self::holding(cfg.initial_power_dbm)
    }

    /// Holds `pow_u_dbm`, advertising it as both MaxP and MinP.
    pub fn holding(pow_u_dbm: f64) -> Self {
        Self {
            pow_u_dbm,
            branch: Branch::Hold,
            advertise_max_p_dbm: pow_u_dbm,
            advertise_min_p_dbm: pow_u_dbm,
            pd_dbm: 0.0,
        }
    }

    fn advertising(mut self, a: &ChannelAssessment) -> Self {
        self.advertise_max_p_dbm = a.max_bp_dbm;
        self.advertise_min_p_dbm = a.min_bp_dbm;
        self
    }
}

/// `PD = MaxBP - MinBP`.
pub fn power_difference(max_bp_dbm: f64, min_bp_dbm: f64) -> Result<f64, PowerError> {
    if max_bp_dbm < min_bp_dbm {
        return Err(PowerError::InconsistentAssessment { max_bp: max_bp_dbm, min_bp: min_bp_dbm });
    }
    Ok(max_bp_dbm - min_bp_dbm)
}

/// Congested-channel rule. Holds `prev`'s power when the candidate is not
/// strictly inside `(MiMP, MaMP)`.
pub fn congested_power(
    a: &ChannelAssessment,
    prev: &PowerDecision,
    cfg: &PowerConfig,
) -> Result<PowerDecision, PowerError> {
    let pd = power_difference(a.max_bp_dbm, a.min_bp_dbm)?;
    let candidate = a.min_bp_dbm + pd * (a.success_pct / 100.0);
    let decision = if a.mi_mp_dbm < candidate && candidate < a.ma_mp_dbm {
        PowerDecision {
            pow_u_dbm: candidate.min(cfg.max_power_dbm),
            branch: Branch::Congested,
            advertise_max_p_dbm: 0.0,
            advertise_min_p_dbm: 0.0,
            pd_dbm: pd,
        }
    } else {
        PowerDecision { pd_dbm: pd, ..PowerDecision::holding(prev.pow_u_dbm.min(cfg.max_power_dbm)) }
    };
    Ok(decision.advertising(a))
}

/// Clear-channel rule, keyed on the distance to the strongest sender.
pub fn clear_channel_power(a: &ChannelAssessment, cfg: &PowerConfig) -> Result<PowerDecision, PowerError> {
    if (a.success_pct - 100.0).abs() > CLEAR_TOLERANCE {
        return Err(PowerError::NotClear(a.success_pct));
    }
    let pd = power_difference(a.max_bp_dbm, a.min_bp_dbm)?;
    let cap = cfg.max_power_dbm;
    let d = a.d_max_sender_m;

    let (raw, branch) = if d > cfg.far_threshold_m {
        (a.max_bp_dbm, Branch::ClearFar)
    } else if d > cfg.mid_threshold_m {
        (a.max_bp_dbm + pd * 0.5, Branch::ClearMid)
    } else {
        (a.max_bp_dbm + pd, Branch::ClearNear)
    };
    let (pow_u, branch) = if raw <= cap { (raw, branch) } else { (cap, Branch::Capped) };

    Ok(PowerDecision {
        pow_u_dbm: pow_u,
        branch,
        advertise_max_p_dbm: 0.0,
        advertise_min_p_dbm: 0.0,
        pd_dbm: pd,
    }
    .advertising(a))
}

/// Picks the next transmit power. `None` means the last window had no live
/// neighbors; the previous power is kept.
pub fn decide_power(
    assessment: Option<&ChannelAssessment>,
    prev: &PowerDecision,
    cfg: &PowerConfig,
) -> PowerDecision {
    let Some(a) = assessment else {
        return PowerDecision { branch: Branch::Hold, ..*prev };
    };
    let hold = || PowerDecision::holding(prev.pow_u_dbm).advertising(a);

    let decided = if (a.success_pct - 100.0).abs() <= CLEAR_TOLERANCE {
        clear_channel_power(a, cfg)
    } else if cfg.congestion_gate_pct > 0.0 && a.success_pct >= cfg.congestion_gate_pct {
        Ok(hold())
    } else {
        congested_power(a, prev, cfg)
    };
    // An inverted MaxBP/MinBP cannot come out of a NeighborTable; hold if a
    // hand-built assessment carries one.
    decided.unwrap_or_else(|_| hold())
}

/// Fixed-power baseline: always the configured cap.
pub fn fixed_power_baseline(cfg: &PowerConfig) -> PowerDecision {
    PowerDecision::holding(cfg.max_power_dbm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn assessment(s: f64, max_bp: f64, min_bp: f64, ma_mp: f64, mi_mp: f64, d: f64) -> ChannelAssessment {
        ChannelAssessment {
            fault_per_m: 0.0,
            success_pct: s,
            n: 5,
            max_d_m: d,
            min_d_m: d,
            max_bp_dbm: max_bp,
            min_bp_dbm: min_bp,
            ma_mp_dbm: ma_mp,
            mi_mp_dbm: mi_mp,
            d_max_sender_m: d,
            window_end_ms: 1000,
            neighbors: Vec::new(),
        }
    }

    fn initial() -> PowerDecision {
        PowerDecision::initial(&PowerConfig::default())
    }

    #[test]
    fn power_difference_cases() {
        assert_eq!(power_difference(29.0, 25.0).unwrap(), 4.0);
        assert_eq!(power_difference(28.0, 28.0).unwrap(), 0.0);
        assert_eq!(power_difference(33.0, 0.0).unwrap(), 33.0);
        assert!(matches!(power_difference(20.0, 25.0), Err(PowerError::InconsistentAssessment { .. })));
    }

    #[test]
    fn congested_worked_example() {
        let a = assessment(63.51, 29.0, 25.0, 29.0, 26.0, 18.0);
        let d = congested_power(&a, &initial(), &PowerConfig::default()).unwrap();
        assert!((d.pow_u_dbm - 27.54).abs() < 0.01);
        assert_eq!(d.branch, Branch::Congested);
        assert_eq!(d.pd_dbm, 4.0);
        assert_eq!((d.advertise_max_p_dbm, d.advertise_min_p_dbm), (29.0, 25.0));
    }

    #[test]
    fn congested_degenerate_span_uses_gate() {
        let cfg = PowerConfig::default();
        let inside = assessment(40.0, 27.0, 27.0, 29.0, 26.0, 18.0);
        let d = congested_power(&inside, &initial(), &cfg).unwrap();
        assert_eq!((d.pow_u_dbm, d.branch), (27.0, Branch::Congested));
        let outside = assessment(40.0, 25.0, 25.0, 29.0, 26.0, 18.0);
        let d = congested_power(&outside, &initial(), &cfg).unwrap();
        assert_eq!((d.pow_u_dbm, d.branch), (33.0, Branch::Hold));
    }

    #[test]
    fn congested_gate_failure_holds() {
        // 25 + 4 * 0.2 = 25.8, not above MiMP = 26.
        let a = assessment(20.0, 29.0, 25.0, 29.0, 26.0, 18.0);
        let prev = PowerDecision::holding(30.0);
        let d = congested_power(&a, &prev, &PowerConfig::default()).unwrap();
        assert_eq!(d.branch, Branch::Hold);
        assert_eq!(d.pow_u_dbm, 30.0);
        assert_eq!(d.advertise_max_p_dbm, 29.0);
    }

    #[test]
    fn clear_branch_table() {
        let cfg = PowerConfig::default();
        let cases = [
            (29.0, 250.0, 29.0, Branch::ClearFar),
            (29.0, 150.0, 31.0, Branch::ClearMid),
            (29.0, 50.0, 33.0, Branch::ClearNear),
            (32.0, 250.0, 32.0, Branch::ClearFar),
            (32.0, 150.0, 33.0, Branch::Capped),
            (32.0, 50.0, 33.0, Branch::Capped),
        ];
        for (max_bp, d, want, branch) in cases {
            let a = assessment(100.0, max_bp, max_bp - 4.0, 30.0, 20.0, d);
            let got = clear_channel_power(&a, &cfg).unwrap();
            assert_eq!((got.pow_u_dbm, got.branch), (want, branch), "MaxBP={max_bp} d={d}");
        }
    }

    #[test]
    fn clear_rule_rejects_congested_input() {
        let a = assessment(99.0, 29.0, 25.0, 29.0, 26.0, 50.0);
        assert!(matches!(clear_channel_power(&a, &PowerConfig::default()), Err(PowerError::NotClear(_))));
    }

    #[test]
    fn decide_without_neighbors_holds_initial() {
        let d = decide_power(None, &initial(), &PowerConfig::default());
        assert_eq!((d.pow_u_dbm, d.branch), (33.0, Branch::Hold));
    }

    #[test]
    fn decide_dispatches() {
        let cfg = PowerConfig::default();
        let worked = assessment(63.51, 29.0, 25.0, 29.0, 26.0, 18.0);
        assert!((decide_power(Some(&worked), &initial(), &cfg).pow_u_dbm - 27.54).abs() < 0.01);

        let clear = assessment(100.0, 29.0, 25.0, 29.0, 26.0, 150.0);
        assert_eq!(decide_power(Some(&clear), &initial(), &cfg), clear_channel_power(&clear, &cfg).unwrap());

        let gated = PowerConfig { congestion_gate_pct: 50.0, ..cfg };
        let d = decide_power(Some(&worked), &initial(), &gated);
        assert_eq!((d.pow_u_dbm, d.branch), (33.0, Branch::Hold));
        assert_eq!(d.advertise_min_p_dbm, 25.0);
        let low = assessment(30.0, 29.0, 25.0, 29.0, 26.0, 18.0);
        assert_eq!(decide_power(Some(&low), &initial(), &gated).branch, Branch::Congested);
    }

    #[test]
    fn fixed_baseline() {
        let cfg = PowerConfig::default();
        assert_eq!(fixed_power_baseline(&cfg).pow_u_dbm, 33.0);
        let low = PowerConfig { max_power_dbm: 20.0, initial_power_dbm: 20.0, ..cfg };
        assert_eq!(fixed_power_baseline(&low).pow_u_dbm, 20.0);
        assert_eq!(fixed_power_baseline(&low), fixed_power_baseline(&low));
    }

    #[test]
    fn config_validation() {
        assert!(PowerConfig::default().validate().is_ok());
        let bad = PowerConfig { mid_threshold_m: 300.0, ..PowerConfig::default() };
        assert!(bad.validate().is_err());
        let bad = PowerConfig { max_power_dbm: 40.0, ..PowerConfig::default() };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn congested_stays_in_span(min_bp in 0.0f64..33.0, pd in 0.0f64..33.0, s in 0.0f64..99.99) {
            let max_bp = (min_bp + pd).min(33.0);
            let a = assessment(s, max_bp, min_bp, 33.0, 0.0, 50.0);
            let d = decide_power(Some(&a), &initial(), &PowerConfig::default());
            if d.branch == Branch::Congested {
                prop_assert!(min_bp <= d.pow_u_dbm && d.pow_u_dbm <= max_bp);
            }
            prop_assert!((0.0..=33.0).contains(&d.pow_u_dbm));
        }

        #[test]
        fn congested_is_monotone_in_success(min_bp in 0.0f64..20.0, pd in 0.0f64..13.0,
                                            s1 in 0.0f64..99.0, ds in 0.0f64..0.99) {
            let s2 = s1 + ds;
            let cfg = PowerConfig::default();
            let lo = congested_power(&assessment(s1, min_bp + pd, min_bp, 34.0, -1.0, 50.0), &initial(), &cfg).unwrap();
            let hi = congested_power(&assessment(s2, min_bp + pd, min_bp, 34.0, -1.0, 50.0), &initial(), &cfg).unwrap();
            prop_assert!(lo.pow_u_dbm <= hi.pow_u_dbm);
        }

        #[test]
        fn clear_never_exceeds_cap_nor_drops_below_max_bp(max_bp in 0.0f64..33.0, pd in 0.0f64..33.0, d in 0.1f64..400.0) {
            let min_bp = (max_bp - pd).max(0.0);
            let a = assessment(100.0, max_bp, min_bp, 33.0, 0.0, d);
            let got = clear_channel_power(&a, &PowerConfig::default()).unwrap();
            prop_assert!(got.pow_u_dbm <= 33.0);
            prop_assert!(got.pow_u_dbm >= max_bp);
        }

        #[test]
        fn decide_is_deterministic(s in 0.0f64..=100.0, max_bp in 10.0f64..33.0, pd in 0.0f64..10.0, d in 1.0f64..300.0) {
            let a = assessment(s, max_bp, max_bp - pd, 33.0, 10.0, d);
            let cfg = PowerConfig::default();
            prop_assert_eq!(decide_power(Some(&a), &initial(), &cfg), decide_power(Some(&a), &initial(), &cfg));
        }
    }
}
