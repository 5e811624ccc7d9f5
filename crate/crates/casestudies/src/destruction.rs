//! Time to overwrite every row of a bank.

use std::fmt;

use pudsim_core::DeviceProfile;
use serde::{Deserialize, Serialize};

use crate::cost::LatencyTable;
use crate::error::{CaseError, Result};

pub const MRC_COUNTS: [u32; 5] = [2, 4, 8, 16, 32];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "method", content = "n", rename_all = "snake_case")]
pub enum DestructionMethod {
    RowCloneBased,
    FracBased,
    MrcBased(u32),
}

impl fmt::Display for DestructionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RowCloneBased => f.write_str("rowclone"),
            Self::FracBased => f.write_str("frac"),
            Self::MrcBased(n) => write!(f, "mrc{n}"),
        }
    }
}

impl DestructionMethod {
    /// Both baselines followed by Multi-RowCopy at every activation count.
    pub fn all() -> Vec<Self> {
        let mut v = vec![Self::RowCloneBased, Self::FracBased];
        v.extend(MRC_COUNTS.iter().map(|&n| Self::MrcBased(n)));
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DestructionReport {
    pub method: DestructionMethod,
    pub steps_per_subarray: u64,
    pub subarray_ns: f64,
    pub bank_ns: f64,
    pub speedup_vs_rowclone: f64,
}

fn subarray_time(method: DestructionMethod, rows: u64, l: &LatencyTable) -> Result<(u64, f64)> {
    let rest = rows.saturating_sub(1);
    Ok(match method {
        DestructionMethod::RowCloneBased => (1 + rest, l.host_write_ns + rest as f64 * l.row_clone_ns),
        DestructionMethod::FracBased => (rows, rows as f64 * l.frac_ns),
        DestructionMethod::MrcBased(n) => {
            if !MRC_COUNTS.contains(&n) {
                return Err(CaseError::InvalidActivationCount(n));
            }
            let copies = rest.div_ceil(u64::from(n) - 1);
            (1 + copies, l.host_write_ns + copies as f64 * l.multi_row_copy_ns)
        }
    })
}

/// Total time for `method` to overwrite one bank, and its speedup over
/// the RowClone-based method.
pub fn destruction_time(
    method: DestructionMethod,
    profile: &DeviceProfile,
    latency: &LatencyTable,
) -> Result<DestructionReport> {
    latency.validate()?;
    let rows = u64::from(profile.rows_per_subarray);
    let subarrays = f64::from(profile.subarrays_per_bank);
    let (steps, t) = subarray_time(method, rows, latency)?;
    let (_, reference) = subarray_time(DestructionMethod::RowCloneBased, rows, latency)?;
    Ok(DestructionReport {
        method,
        steps_per_subarray: steps,
        subarray_ns: t,
        bank_ns: t * subarrays,
        speedup_vs_rowclone: reference / t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_counts() {
        let p = DeviceProfile::preset("mfrH-512").unwrap();
        let l = LatencyTable::from_profile(&p);
        let r = |m| destruction_time(m, &p, &l).unwrap();
        assert_eq!(r(DestructionMethod::RowCloneBased).steps_per_subarray, 512);
        assert_eq!(r(DestructionMethod::FracBased).steps_per_subarray, 512);
        assert_eq!(r(DestructionMethod::MrcBased(2)).steps_per_subarray, 512);
        assert_eq!(r(DestructionMethod::MrcBased(32)).steps_per_subarray, 1 + 17);
        assert_eq!(r(DestructionMethod::RowCloneBased).speedup_vs_rowclone, 1.0);
        assert!(matches!(
            destruction_time(DestructionMethod::MrcBased(3), &p, &l),
            Err(CaseError::InvalidActivationCount(3))
        ));
    }
}
