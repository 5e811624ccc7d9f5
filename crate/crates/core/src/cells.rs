//! Cell storage for one subarray.
//!
//! Rows are materialized lazily: until a row is written its charges come
//! straight from the initial data pattern. Per-cell variation is a keyed hash
//! of the variation seed and the cell coordinates, so it never changes for a
//! given seed and never needs to be stored.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analog::{variation_from_uniforms, AnalogParams, CellVariation};
use crate::error::{Error, Result};
use crate::profile::DeviceProfile;
use crate::seed::{derive, mix, unit};

/// Byte-periodic fills: each row holds the first byte or its complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FixedPattern {
    X00FF,
    XAA55,
    XCC33,
    X6699,
}

impl FixedPattern {
    pub const ALL: [FixedPattern; 4] = [Self::X00FF, Self::XAA55, Self::XCC33, Self::X6699];

    pub fn byte(self) -> u8 {
        match self {
            Self::X00FF => 0x00,
            Self::XAA55 => 0xAA,
            Self::XCC33 => 0xCC,
            Self::X6699 => 0x66,
        }
    }

    /// Bit at `col` of the byte (`inverted` selects the complement).
    #[inline]
    pub fn bit(self, col: usize, inverted: bool) -> bool {
        let b = if inverted { !self.byte() } else { self.byte() };
        (b >> (col % 8)) & 1 == 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DataPattern {
    /// Independent uniform bits per cell.
    Random,
    /// Rows alternate between a byte and its complement.
    Fixed(FixedPattern),
    /// Every cell holds the same bit.
    Solid(bool),
    /// Explicit rows × columns bit matrix.
    Matrix(Arc<Vec<Vec<bool>>>),
}

impl DataPattern {
    pub fn matrix(m: Vec<Vec<bool>>) -> Self {
        Self::Matrix(Arc::new(m))
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Self::Random)
    }
}

impl fmt::Display for DataPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Random => "random",
            Self::Fixed(FixedPattern::X00FF) => "00ff",
            Self::Fixed(FixedPattern::XAA55) => "aa55",
            Self::Fixed(FixedPattern::XCC33) => "cc33",
            Self::Fixed(FixedPattern::X6699) => "6699",
            Self::Solid(false) => "zeros",
            Self::Solid(true) => "ones",
            Self::Matrix(_) => "matrix",
        };
        f.write_str(s)
    }
}

impl FromStr for DataPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        Ok(match key.as_str() {
            "random" | "rand" => Self::Random,
            "00ff" | "0x000xff" | "ff00" => Self::Fixed(FixedPattern::X00FF),
            "aa55" | "0xaa0x55" | "55aa" => Self::Fixed(FixedPattern::XAA55),
            "cc33" | "0xcc0x33" | "33cc" => Self::Fixed(FixedPattern::XCC33),
            "6699" | "0x660x99" | "9966" => Self::Fixed(FixedPattern::X6699),
            "zeros" | "allzeros" | "0" => Self::Solid(false),
            "ones" | "allones" | "1" => Self::Solid(true),
            _ => return Err(Error::UnknownPattern(s.to_string())),
        })
    }
}

impl Serialize for DataPattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DataPattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Physical parameters of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellParams {
    pub variation: CellVariation,
    /// Draw that places this cell's neutral charge.
    pub frac_u: f64,
    /// Draw compared against the restore-droop probability.
    pub weak_u: f64,
    /// Drive strength rank; the cell is underdriven when this falls below
    /// the timing-dependent underdrive probability.
    pub drive_u: f64,
}

/// Charges and variation of one subarray.
#[derive(Debug, Clone, PartialEq)]
pub struct SubarrayState {
    pub index: u32,
    pub rows: u32,
    pub columns: usize,
    pattern: DataPattern,
    data_seed: u64,
    variation_seed: u64,
    variation_pct: f64,
    variation_kind: crate::analog::VariationKind,
    written: BTreeMap<u32, Vec<f64>>,
}

const VARIATION_STREAM: u64 = 0x5641_5249;
const DATA_STREAM: u64 = 0x4441_5441;
const SENSE_AMP_STREAM: u64 = 0x5341_4d50;

/// Subarray 0 of `profile` filled with `pattern`; both data and variation
/// derive from `seed`.
pub fn init_subarray(profile: &DeviceProfile, pattern: DataPattern, seed: u64) -> Result<SubarrayState> {
    SubarrayState::new(
        profile,
        0,
        pattern,
        derive(seed, &[DATA_STREAM]),
        derive(seed, &[VARIATION_STREAM]),
    )
}

impl SubarrayState {
    pub fn new(
        profile: &DeviceProfile,
        index: u32,
        pattern: DataPattern,
        data_seed: u64,
        variation_seed: u64,
    ) -> Result<Self> {
        Self::with_analog(profile, &profile.analog, index, pattern, data_seed, variation_seed)
    }

    pub fn with_analog(
        profile: &DeviceProfile,
        analog: &AnalogParams,
        index: u32,
        pattern: DataPattern,
        data_seed: u64,
        variation_seed: u64,
    ) -> Result<Self> {
        let rows = profile.rows_per_subarray;
        let columns = profile.columns;
        if let DataPattern::Matrix(m) = &pattern {
            let got_cols = m.first().map_or(0, Vec::len);
            if m.len() != rows as usize || m.iter().any(|r| r.len() != columns) {
                return Err(Error::MatrixShape {
                    rows: rows as usize,
                    cols: columns,
                    got_rows: m.len(),
                    got_cols,
                });
            }
        }
        Ok(Self {
            index,
            rows,
            columns,
            pattern,
            data_seed,
            variation_seed,
            variation_pct: analog.variation_pct,
            variation_kind: analog.variation_kind,
            written: BTreeMap::new(),
        })
    }

    pub fn pattern(&self) -> &DataPattern {
        &self.pattern
    }

    pub fn variation_seed(&self) -> u64 {
        self.variation_seed
    }

    /// Replace every row's content with a fresh pattern, keeping variation.
    pub fn refill(&mut self, pattern: DataPattern, data_seed: u64) {
        self.pattern = pattern;
        self.data_seed = data_seed;
        self.written.clear();
    }

    /// Bit the initial pattern places at `(row, col)`.
    pub fn pattern_bit(&self, row: u32, col: usize) -> bool {
        match &self.pattern {
            DataPattern::Random => mix(derive(self.data_seed, &[self.index as u64, row as u64]) ^ col as u64) & 1 == 1,
            DataPattern::Fixed(p) => p.bit(col, row % 2 == 1),
            DataPattern::Solid(b) => *b,
            DataPattern::Matrix(m) => m[row as usize][col],
        }
    }

    pub fn charge(&self, row: u32, col: usize) -> f64 {
        match self.written.get(&row) {
            Some(r) => r[col],
            None => f64::from(u8::from(self.pattern_bit(row, col))),
        }
    }

    /// Mutable charges of a row, materializing it on first touch.
    pub fn row_mut(&mut self, row: u32) -> &mut Vec<f64> {
        if !self.written.contains_key(&row) {
            let fresh = (0..self.columns)
                .map(|c| f64::from(u8::from(self.pattern_bit(row, c))))
                .collect();
            self.written.insert(row, fresh);
        }
        self.written.get_mut(&row).expect("just inserted")
    }

    pub fn row_charges(&self, row: u32) -> Vec<f64> {
        (0..self.columns).map(|c| self.charge(row, c)).collect()
    }

    /// Logic value of each cell (charge above Vdd/2).
    pub fn row_bits(&self, row: u32) -> Vec<bool> {
        (0..self.columns).map(|c| self.charge(row, c) > 0.5).collect()
    }

    pub fn set_row_bits(&mut self, row: u32, bits: &[bool]) -> Result<()> {
        if bits.len() != self.columns {
            return Err(Error::WidthMismatch {
                expected: self.columns,
                got: bits.len(),
            });
        }
        let r = self.row_mut(row);
        for (q, &b) in r.iter_mut().zip(bits) {
            *q = f64::from(u8::from(b));
        }
        Ok(())
    }

    /// Standard-normal mismatch draw of the sense amplifier on `col`.
    pub fn sense_amp_z(&self, col: usize) -> f64 {
        let h = derive(self.variation_seed, &[SENSE_AMP_STREAM, self.index as u64, col as u64]);
        let u1 = 1.0 - unit(h);
        let u2 = unit(mix(h ^ 1));
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn cell(&self, row: u32, col: usize) -> CellParams {
        let h = derive(self.variation_seed, &[self.index as u64, row as u64, col as u64]);
        let variation = variation_from_uniforms(self.variation_pct, self.variation_kind, unit(h), unit(mix(h ^ 1)));
        CellParams {
            variation,
            frac_u: unit(mix(h ^ 2)),
            weak_u: unit(mix(h ^ 3)),
            drive_u: unit(mix(h ^ 4)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DeviceProfile {
        DeviceProfile::preset("mfrH-512").unwrap().with_columns(64)
    }

    #[test]
    fn fixed_rows_alternate() {
        let s = init_subarray(&small(), DataPattern::Fixed(FixedPattern::X00FF), 7).unwrap();
        assert!(s.row_bits(0).iter().all(|&b| !b));
        assert!(s.row_bits(1).iter().all(|&b| b));
        assert!(s.row_bits(2).iter().all(|&b| !b));
    }

    #[test]
    fn zero_matrix_is_all_zero() {
        let p = DeviceProfile::preset("demo-8").unwrap();
        let s = init_subarray(&p, DataPattern::matrix(vec![vec![false; 8]; 8]), 1).unwrap();
        assert!((0..8).all(|r| s.row_charges(r).iter().all(|&q| q == 0.0)));
    }

    #[test]
    fn matrix_shape_checked() {
        let p = DeviceProfile::preset("demo-8").unwrap();
        let e = init_subarray(&p, DataPattern::matrix(vec![vec![false; 7]; 8]), 1).unwrap_err();
        assert!(matches!(e, Error::MatrixShape { .. }));
    }

    #[test]
    fn random_is_reproducible() {
        let a = init_subarray(&small(), DataPattern::Random, 3).unwrap();
        let b = init_subarray(&small(), DataPattern::Random, 3).unwrap();
        for r in 0..16 {
            assert_eq!(a.row_bits(r), b.row_bits(r));
            assert_eq!(a.cell(r, 5), b.cell(r, 5));
        }
        let ones: usize = (0..64).map(|r| a.row_bits(r).iter().filter(|&&x| x).count()).sum();
        assert!((1500..2600).contains(&ones));
    }

    #[test]
    fn pattern_names_round_trip() {
        for name in ["random", "00ff", "aa55", "cc33", "6699", "zeros", "ones"] {
            let p: DataPattern = name.parse().unwrap();
            assert_eq!(p.to_string(), name);
        }
        assert_eq!(
            "0x00/0xFF".parse::<DataPattern>().unwrap(),
            DataPattern::Fixed(FixedPattern::X00FF)
        );
        assert!("plaid".parse::<DataPattern>().is_err());
    }
}
