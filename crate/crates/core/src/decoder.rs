//! Hierarchical row decoder with latched predecoders.
//!
//! A local row address is cut into contiguous bit fields, lowest-order field
//! first. Each field drives one predecoder whose outputs are latched. A
//! timing-violated ACT arriving during precharge adds its own field values
//! to the latches instead of replacing them, and every combination of
//! latched values raises a local wordline.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::DeviceProfile;

/// Field values of one local address, lowest field first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PredecodeVector {
    /// Subarray the address came from, when known.
    pub subarray: Option<u32>,
    pub values: Vec<u16>,
}

/// Asserted outputs per predecoder, each kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatchState {
    pub subarray: Option<u32>,
    pub sets: Vec<Vec<u16>>,
}

impl LatchState {
    /// Number of predecoders holding two or more values.
    pub fn differing_fields(&self) -> usize {
        self.sets.iter().filter(|s| s.len() > 1).count()
    }

    /// Merge another address into the latches.
    pub fn absorb(&mut self, v: &PredecodeVector) -> Result<()> {
        check_compatible(self.subarray, v.subarray, self.sets.len(), v.values.len())?;
        for (set, &value) in self.sets.iter_mut().zip(&v.values) {
            if let Err(pos) = set.binary_search(&value) {
                set.insert(pos, value);
            }
        }
        Ok(())
    }
}

impl From<&PredecodeVector> for LatchState {
    fn from(v: &PredecodeVector) -> Self {
        Self {
            subarray: v.subarray,
            sets: v.values.iter().map(|&x| vec![x]).collect(),
        }
    }
}

fn check_compatible(a: Option<u32>, b: Option<u32>, la: usize, lb: usize) -> Result<()> {
    if la != lb {
        return Err(Error::LatchMismatch(format!("{la} vs {lb} predecoder fields")));
    }
    match (a, b) {
        (Some(x), Some(y)) if x != y => Err(Error::LatchMismatch(format!("subarray {x} vs subarray {y}"))),
        _ => Ok(()),
    }
}

/// Bank row to `(subarray, local row)`.
pub fn split_address(row: u32, profile: &DeviceProfile) -> Result<(u32, u32)> {
    let limit = profile.addressable_rows().min(profile.rows_per_bank);
    if row >= limit {
        return Err(Error::RowOutOfRange { row, limit });
    }
    let r = profile.rows_per_subarray;
    if r.is_power_of_two() {
        let bits = r.trailing_zeros();
        Ok((row >> bits, row & (r - 1)))
    } else {
        Ok((row / r, row % r))
    }
}

/// Inverse of `split_address`.
pub fn join_address(subarray: u32, local: u32, profile: &DeviceProfile) -> u32 {
    subarray * profile.rows_per_subarray + local
}

/// Per-subarray decoder built from a profile's partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDecoder {
    partition: Vec<u8>,
    valid_rows: u32,
}

impl RowDecoder {
    pub fn new(partition: Vec<u8>, valid_rows: u32) -> Self {
        Self { partition, valid_rows }
    }

    pub fn from_profile(profile: &DeviceProfile) -> Self {
        Self::new(profile.decoder_partition.clone(), profile.rows_per_subarray)
    }

    pub fn partition(&self) -> &[u8] {
        &self.partition
    }

    pub fn valid_rows(&self) -> u32 {
        self.valid_rows
    }

    pub fn fields(&self) -> usize {
        self.partition.len()
    }

    pub fn predecode(&self, local: u32) -> Result<PredecodeVector> {
        if local >= self.valid_rows {
            return Err(Error::LocalRowOutOfRange {
                row: local,
                limit: self.valid_rows,
            });
        }
        let mut shift = 0u32;
        let values = self
            .partition
            .iter()
            .map(|&w| {
                let v = (local >> shift) & ((1u32 << w) - 1);
                shift += w as u32;
                v as u16
            })
            .collect();
        Ok(PredecodeVector { subarray: None, values })
    }

    /// Predecode a bank row, tagging the vector with its subarray.
    pub fn predecode_row(&self, row: u32, profile: &DeviceProfile) -> Result<PredecodeVector> {
        let (sa, local) = split_address(row, profile)?;
        let mut v = self.predecode(local)?;
        v.subarray = Some(sa);
        Ok(v)
    }

    /// Recombine one value per field into a local address.
    pub fn compose(&self, values: &[u16]) -> u32 {
        let mut shift = 0u32;
        let mut row = 0u32;
        for (&w, &v) in self.partition.iter().zip(values) {
            row |= (v as u32) << shift;
            shift += w as u32;
        }
        row
    }

    /// Every local row whose field values all sit in the latches, ascending
    /// and restricted to valid rows.
    pub fn expand(&self, latch: &LatchState) -> Vec<u32> {
        let mut rows = vec![0u32];
        let mut shift = 0u32;
        for (&w, set) in self.partition.iter().zip(&latch.sets) {
            rows = rows
                .iter()
                .flat_map(|&base| set.iter().map(move |&v| base | ((v as u32) << shift)))
                .collect();
            shift += w as u32;
        }
        rows.retain(|&r| r < self.valid_rows);
        rows.sort_unstable();
        rows
    }

    /// Rows raised by an APA on local rows `first` and `second`.
    pub fn activation_set(&self, first: u32, second: u32) -> Result<Vec<u32>> {
        let latch = latch_union(&self.predecode(first)?, &self.predecode(second)?)?;
        Ok(self.expand(&latch))
    }

    /// Sample a local pair whose activation set has exactly `n` rows.
    ///
    /// Pairs are drawn uniformly from all qualifying ordered pairs: the set of
    /// differing fields is chosen with probability proportional to how many
    /// pairs it admits, then values are drawn per field.
    pub fn find_pair_for_count<R: Rng + ?Sized>(&self, n: u32, rng: &mut R) -> Result<(u32, u32)> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::UnreachableCount(n));
        }
        let k = n.trailing_zeros() as usize;
        let f = self.fields();
        if k > f {
            return Err(Error::UnreachableCount(n));
        }
        let subsets: Vec<(u32, f64)> = (0u32..(1 << f))
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| {
                let weight = self
                    .partition
                    .iter()
                    .enumerate()
                    .map(|(i, &w)| {
                        let size = (1u64 << w) as f64;
                        if m & (1 << i) != 0 {
                            size * (size - 1.0)
                        } else {
                            size
                        }
                    })
                    .product();
                (m, weight)
            })
            .collect();
        let total: f64 = subsets.iter().map(|s| s.1).sum();
        for _ in 0..10_000 {
            let mut pick = rng.random::<f64>() * total;
            let mask = subsets
                .iter()
                .find(|(_, w)| {
                    pick -= w;
                    pick < 0.0
                })
                .unwrap_or(subsets.last().expect("k <= fields"))
                .0;
            let mut a = Vec::with_capacity(f);
            let mut b = Vec::with_capacity(f);
            for (i, &w) in self.partition.iter().enumerate() {
                let size = 1u16 << w;
                let x = rng.random_range(0..size);
                let y = if mask & (1 << i) != 0 {
                    (x + rng.random_range(1..size)) % size
                } else {
                    x
                };
                a.push(x);
                b.push(y);
            }
            let (first, second) = (self.compose(&a), self.compose(&b));
            if first >= self.valid_rows || second >= self.valid_rows {
                continue;
            }
            if self.activation_set(first, second)?.len() == n as usize {
                return Ok((first, second));
            }
        }
        Err(Error::UnreachableCount(n))
    }
}

/// Local predecode with a profile's decoder.
pub fn predecode(local: u32, profile: &DeviceProfile) -> Result<PredecodeVector> {
    RowDecoder::from_profile(profile).predecode(local)
}

/// Per-field union of two addresses.
pub fn latch_union(first: &PredecodeVector, second: &PredecodeVector) -> Result<LatchState> {
    let mut latch = LatchState::from(first);
    latch.absorb(second)?;
    Ok(latch)
}

/// Cartesian expansion under a profile's decoder.
pub fn expand_activation(latch: &LatchState, profile: &DeviceProfile) -> Vec<u32> {
    RowDecoder::from_profile(profile).expand(latch)
}

/// Profile-level wrapper for `RowDecoder::find_pair_for_count`.
pub fn find_pair_for_count<R: Rng + ?Sized>(profile: &DeviceProfile, n: u32, rng: &mut R) -> Result<(u32, u32)> {
    RowDecoder::from_profile(profile).find_pair_for_count(n, rng)
}
