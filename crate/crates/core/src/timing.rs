use serde::{Deserialize, Serialize};

use crate::profile::DeviceProfile;

/// How the second ACT of an ACT-PRE-ACT sequence treats the first row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActivationMode {
    /// Precharge completed; the second ACT is an ordinary activation.
    Nominal,
    /// First wordline dropped, second raised onto the still-driven bitlines.
    ConsecutiveTwoRow,
    /// Predecoder latches merged; many wordlines raised together.
    SimultaneousUnion,
}

/// State of the sense amplifier when the precharge was issued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SenseMode {
    FullyLatched,
    /// Amplifier not yet enabled; the first row has only shared charge.
    ChargeSharing,
    /// Amplifier enabled but cut short before driving the rails.
    Underdriven,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimingRegime {
    pub activation_mode: ActivationMode,
    pub sense_mode: SenseMode,
}

impl std::fmt::Display for TimingRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}/{:?}", self.activation_mode, self.sense_mode)
    }
}

/// Classify an APA's `t1` (ACT to PRE) and `t2` (PRE to ACT).
pub fn classify_timing(t1: f64, t2: f64, profile: &DeviceProfile) -> TimingRegime {
    let t = &profile.timing;
    let activation_mode = if t2 <= t.union_t2_max {
        ActivationMode::SimultaneousUnion
    } else if t2 < t.t_rp {
        ActivationMode::ConsecutiveTwoRow
    } else {
        ActivationMode::Nominal
    };
    TimingRegime {
        activation_mode,
        sense_mode: sense_mode(t1, profile),
    }
}

pub fn sense_mode(t1: f64, profile: &DeviceProfile) -> SenseMode {
    let t = &profile.timing;
    if t1 >= t.t_ras {
        SenseMode::FullyLatched
    } else if t1 <= t.charge_share_t1_max {
        SenseMode::ChargeSharing
    } else {
        SenseMode::Underdriven
    }
}

/// True when `delay` is a positive integer multiple of the granularity.
pub fn on_grid(delay: f64, profile: &DeviceProfile) -> bool {
    let g = profile.timing.granularity;
    if !delay.is_finite() || delay <= 0.0 {
        return false;
    }
    let k = (delay / g).round();
    k >= 1.0 && (delay - k * g).abs() <= 1e-9 * delay.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ActivationMode::*;
    use SenseMode::*;

    fn p() -> DeviceProfile {
        DeviceProfile::preset("mfrH-512").unwrap()
    }

    #[test]
    fn anchor_points() {
        let p = p();
        assert_eq!(
            classify_timing(36.0, 3.0, &p),
            TimingRegime {
                activation_mode: SimultaneousUnion,
                sense_mode: FullyLatched
            }
        );
        assert_eq!(
            classify_timing(1.5, 3.0, &p),
            TimingRegime {
                activation_mode: SimultaneousUnion,
                sense_mode: ChargeSharing
            }
        );
        assert_eq!(
            classify_timing(36.0, 15.0, &p),
            TimingRegime {
                activation_mode: Nominal,
                sense_mode: FullyLatched
            }
        );
        assert_eq!(classify_timing(36.0, 6.0, &p).activation_mode, ConsecutiveTwoRow);
        assert_eq!(classify_timing(12.0, 3.0, &p).sense_mode, Underdriven);
    }

    #[test]
    fn grid_check() {
        let p = p();
        assert!(on_grid(1.5, &p));
        assert!(on_grid(36.0, &p));
        assert!(!on_grid(2.0, &p));
        assert!(!on_grid(0.0, &p));
        assert!(!on_grid(-1.5, &p));
    }
}
