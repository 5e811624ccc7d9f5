//! Row-group selection: a pure function of the profile and the master seed.

use pudsim_core::decoder::join_address;
use pudsim_core::seed::{derive, rng_for};
use pudsim_core::{DeviceProfile, RowDecoder};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;

pub(crate) const SUBARRAY_STREAM: u64 = 0x5355_4241;
pub(crate) const PAIR_STREAM: u64 = 0x5041_4952;

/// One sampled (R_F, R_S) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowGroup {
    pub bank: usize,
    pub subarray: u32,
    /// Index within the subarray, `0..groups_per_subarray`.
    pub index: usize,
    pub n: u32,
    /// Bank row addresses.
    pub first: u32,
    pub second: u32,
}

impl RowGroup {
    pub fn pair(&self) -> (u32, u32) {
        (self.first, self.second)
    }

    /// Seed key shared by every parameter combination run on this group.
    pub fn key(&self) -> [u64; 4] {
        [
            self.bank as u64,
            u64::from(self.subarray),
            self.index as u64,
            u64::from(self.n),
        ]
    }
}

/// Tested subarrays of one bank, ascending.
pub fn subarrays_for_bank(profile: &DeviceProfile, count: usize, seed: u64, bank: usize) -> Vec<u32> {
    let total = profile.subarrays_per_bank as usize;
    let mut rng = rng_for(seed, &[SUBARRAY_STREAM, bank as u64]);
    let mut picked: Vec<u32> = index::sample(&mut rng, total, count.min(total))
        .into_iter()
        .map(|i| i as u32)
        .collect();
    picked.sort_unstable();
    picked
}

/// All groups of a config for one activation count, in canonical order.
pub fn sample_groups(config: &ExperimentConfig, profile: &DeviceProfile, n: u32) -> Result<Vec<RowGroup>> {
    let decoder = RowDecoder::from_profile(profile);
    let mut out = Vec::with_capacity(config.groups());
    for bank in 0..config.banks {
        for subarray in subarrays_for_bank(profile, config.subarrays_per_bank, config.seed, bank) {
            for index in 0..config.groups_per_subarray {
                let key = [
                    PAIR_STREAM,
                    bank as u64,
                    u64::from(subarray),
                    index as u64,
                    u64::from(n),
                ];
                let mut rng = rng_for(derive(config.seed, &key), &[]);
                let (a, b) = decoder.find_pair_for_count(n, &mut rng)?;
                out.push(RowGroup {
                    bank,
                    subarray,
                    index,
                    n,
                    first: join_address(subarray, a, profile),
                    second: join_address(subarray, b, profile),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
#[allow(clippy::field_reassign_with_default)]
mod tests {
    use super::*;

    #[test]
    fn groups_are_reproducible_and_sized() {
        let p = DeviceProfile::preset("mfrH-512").unwrap();
        let mut c = ExperimentConfig::default();
        c.banks = 2;
        c.groups_per_subarray = 4;
        let a = sample_groups(&c, &p, 8).unwrap();
        assert_eq!(a, sample_groups(&c, &p, 8).unwrap());
        assert_eq!(a.len(), 2 * 3 * 4);
        let d = RowDecoder::from_profile(&p);
        for g in &a {
            let (sa, fa) = pudsim_core::split_address(g.first, &p).unwrap();
            let (sb, fb) = pudsim_core::split_address(g.second, &p).unwrap();
            assert_eq!((sa, sb), (g.subarray, g.subarray));
            assert_eq!(d.activation_set(fa, fb).unwrap().len(), 8);
        }
        c.seed = 1;
        assert_ne!(a, sample_groups(&c, &p, 8).unwrap());
    }

    #[test]
    fn subarrays_are_distinct() {
        let p = DeviceProfile::preset("mfrH-512").unwrap();
        let s = subarrays_for_bank(&p, 3, 5, 0);
        assert_eq!(s.len(), 3);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }
}
