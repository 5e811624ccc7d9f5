//! Subarray boundary discovery by RowClone probing.
//!
//! A clone from row `a` lands in row `b` only when both share a subarray,
//! and subarrays are contiguous, so "same subarray as `start`" is monotone
//! in the row address. Each boundary is found by galloping then bisecting.

use pudsim_core::ops::row_clone;
use pudsim_core::seed::rng_for;
use pudsim_core::{Bank, Error};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Rows `start..end` of one discovered subarray.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowRange {
    pub start: u32,
    pub end: u32,
}

impl RowRange {
    pub fn len(&self) -> u32 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Fraction of columns that must land for a probe to count as a copy.
pub const COPY_THRESHOLD: f64 = 0.9;

struct Prober<'a> {
    bank: &'a mut Bank,
    seed: u64,
    probes: u64,
}

impl Prober<'_> {
    fn same(&mut self, a: u32, b: u32) -> Result<bool> {
        if a == b {
            return Ok(true);
        }
        self.probes += 1;
        let cols = self.bank.profile().columns;
        let mut rng = rng_for(self.seed, &[self.probes]);
        let src: Vec<bool> = (0..cols).map(|_| rng.random()).collect();
        let inverse: Vec<bool> = src.iter().map(|b| !b).collect();
        self.bank.load_row(a, &src)?;
        self.bank.load_row(b, &inverse)?;
        match row_clone(self.bank, a, b) {
            Ok(out) => Ok(out.fraction() >= COPY_THRESHOLD),
            Err(Error::CrossSubarray { .. }) => Ok(false),
            Err(e) => Err(e.into()),
        }
    }
}

/// Maximal row ranges within which RowClone succeeds, covering every
/// addressable row of the bank.
pub fn discover_subarrays(bank: &mut Bank, seed: u64) -> Result<Vec<RowRange>> {
    let p = bank.profile();
    let limit = p.addressable_rows().min(p.rows_per_bank);
    let mut prober = Prober { bank, seed, probes: 0 };
    let mut ranges = Vec::new();
    let mut start = 0u32;
    while start < limit {
        let mut lo = start;
        let mut step = 1u32;
        let hi = loop {
            let probe = lo.saturating_add(step);
            if probe >= limit {
                break limit;
            }
            if prober.same(start, probe)? {
                lo = probe;
                step = step.saturating_mul(2);
            } else {
                break probe;
            }
        };
        let (mut lo, mut hi) = (lo, hi);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if prober.same(start, mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        ranges.push(RowRange { start, end: hi });
        start = hi;
    }
    log::debug!("{} subarrays found with {} probes", ranges.len(), prober.probes);
    Ok(ranges)
}
