//! Device profiles: geometry, timing, decoder layout and analog defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analog::{AnalogParams, SenseBias};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Manufacturer {
    H,
    M,
}

/// What happens when the second ACT of an APA lands in another subarray.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CrossSubarrayPolicy {
    /// The second activation replaces the first.
    #[default]
    Replace,
    /// The command is rejected.
    Reject,
}

/// Timing parameters and the regime thresholds derived from them (ns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingParams {
    pub t_ras: f64,
    pub t_rp: f64,
    pub granularity: f64,
    /// Largest `t2` that still merges latches.
    pub union_t2_max: f64,
    /// Largest `t1` at which the first row is still only charge sharing.
    pub charge_share_t1_max: f64,
    /// `t2` used by RowClone.
    pub row_clone_t2: f64,
    /// Duration of one data burst on the bus, used for host transfers.
    pub burst_ns: f64,
    /// Columns moved per burst.
    pub burst_bits: usize,
}

impl Default for TimingParams {
    fn default() -> Self {
        Self {
            t_ras: 36.0,
            t_rp: 15.0,
            granularity: 1.5,
            union_t2_max: 3.0,
            charge_share_t1_max: 3.0,
            row_clone_t2: 6.0,
            burst_ns: 3.33,
            burst_bits: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceProfile {
    pub name: String,
    pub manufacturer: Manufacturer,
    pub rows_per_bank: u32,
    pub rows_per_subarray: u32,
    pub subarrays_per_bank: u32,
    /// Bits per row.
    pub columns: usize,
    #[serde(default)]
    pub timing: TimingParams,
    /// Predecoder field widths in bits, lowest-order field first.
    pub decoder_partition: Vec<u8>,
    #[serde(default)]
    pub cross_subarray: CrossSubarrayPolicy,
    #[serde(default)]
    pub analog: AnalogParams,
}

pub const PRESETS: [&str; 4] = ["mfrH-512", "mfrH-640", "mfrM-1024", "demo-8"];

impl DeviceProfile {
    /// Built-in profile by name.
    pub fn preset(name: &str) -> Result<Self> {
        let base = |name: &str, rows_per_subarray, subarrays, partition: Vec<u8>| Self {
            name: name.to_string(),
            manufacturer: Manufacturer::H,
            rows_per_bank: 1 << 16,
            rows_per_subarray,
            subarrays_per_bank: subarrays,
            columns: 8192,
            timing: TimingParams::default(),
            decoder_partition: partition,
            cross_subarray: CrossSubarrayPolicy::Replace,
            analog: AnalogParams::default(),
        };
        let p = match name {
            "mfrH-512" => base(name, 512, 128, vec![1, 2, 2, 2, 2]),
            "mfrH-640" => base(name, 640, 102, vec![2, 2, 2, 2, 2]),
            "mfrM-1024" => {
                let mut p = base(name, 1024, 128, vec![2, 2, 2, 2, 2]);
                p.manufacturer = Manufacturer::M;
                p.rows_per_bank = 1 << 17;
                p.columns = 16384;
                p.analog.mfr_m_bias = Some(SenseBias {
                    toward: true,
                    magnitude: 0.015,
                });
                p
            }
            "demo-8" => {
                let mut p = base(name, 8, 1, vec![1, 2]);
                p.rows_per_bank = 8;
                p.columns = 8;
                p
            }
            other => return Err(Error::UnknownPreset(other.to_string())),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let p: Self = toml::from_str(text).map_err(|e| Error::ProfileParse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("profiles always serialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::ProfileParse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Preset name, or else a TOML file path.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match Self::preset(name_or_path) {
            Err(Error::UnknownPreset(_)) => Self::load(Path::new(name_or_path)),
            other => other,
        }
    }

    /// Total predecoded address bits.
    pub fn decoder_bits(&self) -> u32 {
        self.decoder_partition.iter().map(|&w| w as u32).sum()
    }

    /// Rows reachable through `split_address`.
    pub fn addressable_rows(&self) -> u32 {
        self.rows_per_subarray * self.subarrays_per_bank
    }

    pub fn with_columns(mut self, columns: usize) -> Self {
        self.columns = columns;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidProfile(m));
        if self.rows_per_subarray == 0 || self.subarrays_per_bank == 0 || self.columns == 0 {
            return bad("geometry counts must be positive".into());
        }
        if self.decoder_partition.is_empty() || self.decoder_partition.iter().any(|&w| w == 0 || w > 8) {
            return bad("decoder fields must be 1..=8 bits wide".into());
        }
        let bits = self.decoder_bits();
        if bits > 24 {
            return bad("decoder partition is too wide".into());
        }
        if self.rows_per_subarray.is_power_of_two() {
            if self.rows_per_subarray.trailing_zeros() != bits {
                return bad(format!(
                    "partition covers {bits} bits but a {}-row subarray needs {}",
                    self.rows_per_subarray,
                    self.rows_per_subarray.trailing_zeros()
                ));
            }
        } else if (1u32 << bits) < self.rows_per_subarray {
            return bad(format!(
                "partition covers {bits} bits, too few for {} rows",
                self.rows_per_subarray
            ));
        }
        if u64::from(self.rows_per_subarray) * u64::from(self.subarrays_per_bank) > u64::from(self.rows_per_bank) {
            return bad("subarrays exceed the bank".into());
        }
        let t = &self.timing;
        if t.granularity.is_nan() || t.granularity <= 0.0 {
            return bad("command granularity must be positive".into());
        }
        if !(t.t_ras > t.t_rp && t.t_rp > 0.0) {
            return bad("need tRAS > tRP > 0".into());
        }
        if !(t.union_t2_max > 0.0 && t.union_t2_max < t.t_rp) {
            return bad("union_t2_max must lie in (0, tRP)".into());
        }
        if !(t.row_clone_t2 > t.union_t2_max && t.row_clone_t2 < t.t_rp) {
            return bad("row_clone_t2 must fall in the consecutive-activation window".into());
        }
        if t.burst_bits == 0 || t.burst_ns < 0.0 {
            return bad("burst parameters must be positive".into());
        }
        self.analog.validate()
    }
}
