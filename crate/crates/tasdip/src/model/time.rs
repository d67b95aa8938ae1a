//! Time base shared by every component: exact integer nanoseconds.
//!
//! All scheduling and simulation arithmetic stays in `i64` nanoseconds so
//! that zero-jitter assertions can compare timestamps for equality.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Integer nanoseconds. Signed so that offset differences can be normalized.
pub type Ns = i64;

/// Floor modulo: result is always in `[0, m)` for `m > 0`.
#[inline]
pub fn floor_mod(a: Ns, m: Ns) -> Ns {
    debug_assert!(m > 0);
    ((a % m) + m) % m
}

/// Ceiling division for non-negative numerators.
#[inline]
pub fn ceil_div(a: Ns, b: Ns) -> Ns {
    debug_assert!(a >= 0 && b > 0);
    (a + b - 1) / b
}

/// Transmission time of `len` bytes over a link of `bw` bits per second,
/// rounded up to whole nanoseconds.
#[inline]
pub fn tx_time(len_bytes: u32, bw_bps: u64) -> Ns {
    debug_assert!(bw_bps > 0);
    let bits = 8u128 * len_bytes as u128 * 1_000_000_000u128;
    ((bits + bw_bps as u128 - 1) / bw_bps as u128) as Ns
}

/// Cycle-time / hypercycle / DIP-cycle configuration.
///
/// The hypercycle equals the TAS cycle time and contains a whole number of
/// DIP cycles; construction fails when the durations do not divide exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeConfig {
    /// TAS cycle time (GCL period).
    pub t_ct: Ns,
    /// DIP cycle duration.
    pub t_dip: Ns,
    /// DIP cycles per hypercycle.
    pub n_dip: i64,
    /// Hypercycle duration (equals `t_ct`).
    pub t_hc: Ns,
}

impl TimeConfig {
    pub fn new(t_ct: Ns, t_dip: Ns) -> Result<Self, ModelError> {
        if t_ct <= 0 || t_dip <= 0 {
            return Err(ModelError::InvalidTimeConfig(format!(
                "durations must be positive, got t_ct={t_ct} t_dip={t_dip}"
            )));
        }
        if t_ct % t_dip != 0 {
            return Err(ModelError::InvalidTimeConfig(format!(
                "cycle time {t_ct} ns is not a multiple of the DIP cycle {t_dip} ns"
            )));
        }
        Ok(Self {
            t_ct,
            t_dip,
            n_dip: t_ct / t_dip,
            t_hc: t_ct,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_relations_hold() {
        let t = TimeConfig::new(2_000_000, 10_000).unwrap();
        assert_eq!(t.t_hc, t.t_ct);
        assert_eq!(t.t_hc, t.n_dip * t.t_dip);
        assert_eq!(t.n_dip, 200);
    }

    #[test]
    fn config_rejects_misaligned_cycles() {
        assert!(TimeConfig::new(2_000_000, 10_001).is_err());
        assert!(TimeConfig::new(0, 10).is_err());
        assert!(TimeConfig::new(100, -10).is_err());
    }

    #[test]
    fn tx_time_is_exact_for_round_rates() {
        // 1500 bytes at 1 Gbps: 12 us; at 10 Gbps: 1.2 us.
        assert_eq!(tx_time(1500, 1_000_000_000), 12_000);
        assert_eq!(tx_time(1500, 10_000_000_000), 1_200);
        // Rounds up on fractional nanoseconds.
        assert_eq!(tx_time(1, 3_000_000_000), 3);
    }

    #[test]
    fn floor_mod_normalizes_negatives() {
        assert_eq!(floor_mod(-800_000, 2_000_000), 1_200_000);
        assert_eq!(floor_mod(300, 2_000_000), 300);
        assert_eq!(floor_mod(2_000_000, 2_000_000), 0);
    }
}
