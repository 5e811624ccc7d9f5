//! Experiment configuration.
//!
//! Grid lists left empty fall back to the defaults of the chosen operation,
//! so a config file only has to name what it changes.

use std::fmt;
use std::path::Path;

use pudsim_core::analog::{AnalogParams, TEMPERATURE_RANGE, VPP_RANGE};
use pudsim_core::ops::{ACTIVATION_COUNTS, MAJ_WIDTHS};
use pudsim_core::timing::on_grid;
use pudsim_core::{DataPattern, DeviceProfile};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperationKind {
    /// APA, then WR, then read back every activated row.
    ActivationTest,
    MajX,
    MultiRowCopy,
}

impl fmt::Display for OperationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ActivationTest => "activation_test",
            Self::MajX => "maj_x",
            Self::MultiRowCopy => "multi_row_copy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Preset name or path to a profile TOML file.
    pub profile: String,
    pub operation: OperationKind,
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    /// Activation counts.
    pub n: Vec<u32>,
    /// MAJ widths; ignored by the other operations.
    pub x: Vec<usize>,
    pub patterns: Vec<DataPattern>,
    pub temperatures: Vec<f64>,
    pub vpp: Vec<f64>,
    pub trials: usize,
    pub groups_per_subarray: usize,
    pub subarrays_per_bank: usize,
    pub banks: usize,
    /// Simulated columns per row; the profile width when absent.
    pub columns: Option<usize>,
    pub seed: u64,
    /// Replaces the profile's analog parameters.
    pub analog: Option<AnalogParams>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            profile: "mfrH-512".into(),
            operation: OperationKind::ActivationTest,
            t1: Vec::new(),
            t2: Vec::new(),
            n: Vec::new(),
            x: Vec::new(),
            patterns: Vec::new(),
            temperatures: Vec::new(),
            vpp: Vec::new(),
            trials: 10,
            groups_per_subarray: 100,
            subarrays_per_bank: 3,
            banks: 16,
            columns: None,
            seed: 0,
            analog: None,
        }
    }
}

fn or_default<T: Clone>(v: &[T], d: &[T]) -> Vec<T> {
    if v.is_empty() {
        d.to_vec()
    } else {
        v.to_vec()
    }
}

impl ExperimentConfig {
    pub fn for_operation(operation: OperationKind) -> Self {
        Self {
            operation,
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn t1_grid(&self) -> Vec<f64> {
        let d: &[f64] = match self.operation {
            OperationKind::MultiRowCopy => &[1.5, 3.0, 36.0],
            _ => &[1.5, 3.0],
        };
        or_default(&self.t1, d)
    }

    pub fn t2_grid(&self) -> Vec<f64> {
        or_default(&self.t2, &[1.5, 3.0])
    }

    pub fn n_grid(&self) -> Vec<u32> {
        let d: &[u32] = match self.operation {
            OperationKind::MajX => &[4, 8, 16, 32],
            _ => &[2, 4, 8, 16, 32],
        };
        or_default(&self.n, d)
    }

    pub fn x_grid(&self) -> Vec<usize> {
        match self.operation {
            OperationKind::MajX => or_default(&self.x, &MAJ_WIDTHS),
            _ => Vec::new(),
        }
    }

    pub fn pattern_grid(&self) -> Vec<DataPattern> {
        or_default(&self.patterns, &[DataPattern::Random])
    }

    pub fn temperature_grid(&self) -> Vec<f64> {
        or_default(&self.temperatures, &[TEMPERATURE_RANGE.0])
    }

    pub fn vpp_grid(&self) -> Vec<f64> {
        or_default(&self.vpp, &[VPP_RANGE.1])
    }

    /// Total row groups per activation count.
    pub fn groups(&self) -> usize {
        self.banks * self.subarrays_per_bank * self.groups_per_subarray
    }

    /// Profile with the config's column and analog overrides applied.
    pub fn resolve_profile(&self) -> Result<DeviceProfile> {
        let mut p = DeviceProfile::resolve(&self.profile)?;
        if let Some(c) = self.columns {
            p.columns = c;
        }
        if let Some(a) = &self.analog {
            p.analog = a.clone();
        }
        p.validate()?;
        Ok(p)
    }

    /// Check the grids against the profile they will run on.
    pub fn validate(&self, profile: &DeviceProfile) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.trials == 0 || self.groups() == 0 {
            return bad("trials, banks, subarrays_per_bank and groups_per_subarray must be positive".into());
        }
        if self.subarrays_per_bank as u64 > u64::from(profile.subarrays_per_bank) {
            return bad(format!(
                "subarrays_per_bank = {} but the profile has {}",
                self.subarrays_per_bank, profile.subarrays_per_bank
            ));
        }
        for t in self.t1_grid().into_iter().chain(self.t2_grid()) {
            if !on_grid(t, profile) {
                return bad(format!(
                    "delay {t} ns is not a positive multiple of {} ns",
                    profile.timing.granularity
                ));
            }
        }
        let fields = profile.decoder_partition.len() as u32;
        for n in self.n_grid() {
            let min = if self.operation == OperationKind::ActivationTest {
                1
            } else {
                2
            };
            if n < min || !n.is_power_of_two() || n.trailing_zeros() > fields {
                return bad(format!("activation count {n} is not reachable on this profile"));
            }
            if self.operation == OperationKind::MajX && !ACTIVATION_COUNTS.contains(&(n as usize)) {
                return bad(format!("MAJ needs N in {ACTIVATION_COUNTS:?}, got {n}"));
            }
        }
        for x in self.x_grid() {
            if !MAJ_WIDTHS.contains(&x) {
                return bad(format!("MAJ width {x} is not one of {MAJ_WIDTHS:?}"));
            }
        }
        if self.operation == OperationKind::MajX {
            let sharing = profile.timing.charge_share_t1_max;
            let union = profile.timing.union_t2_max;
            if self.t1_grid().iter().any(|&t| t > sharing) || self.t2_grid().iter().any(|&t| t > union) {
                return bad(format!("MAJ timings need t1 <= {sharing} ns and t2 <= {union} ns"));
            }
        }
        for &t in &self.temperature_grid() {
            if !(TEMPERATURE_RANGE.0..=TEMPERATURE_RANGE.1).contains(&t) {
                return bad(format!("temperature {t} outside {TEMPERATURE_RANGE:?}"));
            }
        }
        for &v in &self.vpp_grid() {
            if !(VPP_RANGE.0..=VPP_RANGE.1).contains(&v) {
                return bad(format!("vpp {v} outside {VPP_RANGE:?}"));
            }
        }
        if self.pattern_grid().iter().any(|p| matches!(p, DataPattern::Matrix(_))) {
            return bad("explicit matrices are not supported in sweeps".into());
        }
        Ok(())
    }
}

#[cfg(test)]
#[allow(clippy::field_reassign_with_default)]
mod tests {
    use super::*;

    #[test]
    fn default_accounting() {
        let c = ExperimentConfig::default();
        assert_eq!(c.groups() * c.n_grid().len(), 24_000);
    }

    #[test]
    fn parses_partial_toml() {
        let c = ExperimentConfig::from_toml_str("operation = \"maj_x\"\nx = [3, 5]\npatterns = [\"random\", \"00ff\"]")
            .unwrap();
        assert_eq!(c.x_grid(), vec![3, 5]);
        assert_eq!(c.n_grid(), vec![4, 8, 16, 32]);
        assert_eq!(c.pattern_grid().len(), 2);
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn rejects_bad_grids() {
        let p = DeviceProfile::preset("mfrH-512").unwrap();
        let mut c = ExperimentConfig::for_operation(OperationKind::MajX);
        c.validate(&p).unwrap();
        c.t1 = vec![36.0];
        assert!(c.validate(&p).is_err());
        let mut c = ExperimentConfig::default();
        c.t2 = vec![2.0];
        assert!(c.validate(&p).is_err());
        let mut c = ExperimentConfig::default();
        c.n = vec![64];
        assert!(c.validate(&p).is_err());
        let mut c = ExperimentConfig::default();
        c.temperatures = vec![100.0];
        assert!(c.validate(&p).is_err());
    }
}
