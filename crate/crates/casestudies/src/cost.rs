//! Primitive latencies and per-(X, N) usable-column fractions.

use std::collections::BTreeMap;
use std::path::Path;

use pudsim_core::ops::{plan_replication, ACTIVATION_COUNTS, MAJ_WIDTHS};
use pudsim_core::DeviceProfile;
use serde::{Deserialize, Serialize};

use crate::error::{CaseError, Result};

/// Charge-sharing APA delays used for MAJ (ns).
pub const MAJ_T1: f64 = 1.5;
pub const MAJ_T2: f64 = 3.0;
/// Latched-source APA delays used for Multi-RowCopy (ns).
pub const MRC_T1: f64 = 36.0;
pub const MRC_T2: f64 = 3.0;

/// Latency of each primitive in nanoseconds, as sums of command delays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyTable {
    /// ACT, PRE, ACT, then restore and close.
    pub maj_ns: f64,
    pub multi_row_copy_ns: f64,
    /// Two consecutive full activations.
    pub row_clone_ns: f64,
    /// ACT cut short, then close.
    pub frac_ns: f64,
    /// One row written over the bus.
    pub host_write_ns: f64,
}

impl LatencyTable {
    pub fn from_profile(profile: &DeviceProfile) -> Self {
        let t = &profile.timing;
        let close = t.t_ras + t.t_rp;
        let bursts = profile.columns.div_ceil(t.burst_bits.max(1));
        Self {
            maj_ns: MAJ_T1 + MAJ_T2 + close,
            multi_row_copy_ns: MRC_T1 + MRC_T2 + close,
            row_clone_ns: t.t_ras + t.row_clone_t2 + close,
            frac_ns: t.granularity + t.t_rp,
            host_write_ns: bursts as f64 * t.burst_ns + close,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            maj_ns: self.maj_ns * factor,
            multi_row_copy_ns: self.multi_row_copy_ns * factor,
            row_clone_ns: self.row_clone_ns * factor,
            frac_ns: self.frac_ns * factor,
            host_write_ns: self.host_write_ns * factor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.maj_ns,
            self.multi_row_copy_ns,
            self.row_clone_ns,
            self.frac_ns,
            self.host_write_ns,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(CaseError::BadLatency(format!("{self:?}")))
        }
    }

    /// One MAJ-X at N rows: fill the operand copies, neutralize the spare
    /// rows, then fire the APA.
    pub fn maj_total(&self, x: usize, n: usize) -> Result<f64> {
        let plan = plan_replication(x, n)?;
        let fill = if plan.copies == 1 {
            self.row_clone_ns
        } else {
            self.multi_row_copy_ns
        };
        Ok(x as f64 * fill + plan.neutral_count as f64 * self.frac_ns + self.maj_ns)
    }
}

/// How low success rates turn into lost throughput.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThroughputModel {
    /// Only columns that succeed for every primitive a kernel uses carry
    /// results; throughput is that fraction over the total latency.
    #[default]
    UsableColumns,
    /// Every MAJ (with its operand fill) is repeated 1/p times on average.
    Retry,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsableEntry {
    pub x: usize,
    pub n: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub latency: LatencyTable,
    pub usable: Vec<UsableEntry>,
    /// The (X, N) every speedup is measured against.
    pub baseline: (usize, usize),
    pub mode: ThroughputModel,
}

impl CostModel {
    pub fn new(latency: LatencyTable, usable: Vec<UsableEntry>) -> Result<Self> {
        latency.validate()?;
        let mut seen = BTreeMap::new();
        for e in &usable {
            if !(0.0..=1.0).contains(&e.fraction) {
                return Err(CaseError::BadFraction {
                    x: e.x,
                    n: e.n,
                    value: e.fraction,
                });
            }
            plan_replication(e.x, e.n)?;
            seen.insert((e.x, e.n), e.fraction);
        }
        Ok(Self {
            latency,
            usable: seen
                .into_iter()
                .map(|((x, n), fraction)| UsableEntry { x, n, fraction })
                .collect(),
            baseline: (3, 4),
            mode: ThroughputModel::default(),
        })
    }

    /// Success rates measured on real chips: MAJ3 at 4 and 32 rows, and
    /// MAJ5/7/9 at 32 rows.
    pub fn reference(profile: &DeviceProfile) -> Self {
        let rates = [
            (3, 4, 0.6819),
            (3, 32, 0.99),
            (5, 32, 0.7964),
            (7, 32, 0.3387),
            (9, 32, 0.0591),
        ];
        let usable = rates
            .iter()
            .map(|&(x, n, fraction)| UsableEntry { x, n, fraction })
            .collect();
        Self::new(LatencyTable::from_profile(profile), usable).expect("reference table is valid")
    }

    /// Success rates from a harness `summary.csv`: for each (X, N) the best
    /// mean over timing points, preferring random-data rows.
    pub fn from_summary_csv(profile: &DeviceProfile, path: &Path) -> Result<Self> {
        let read_err = |e: &dyn std::fmt::Display| CaseError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut reader = csv::Reader::from_path(path).map_err(|e| read_err(&e))?;
        let mut random = BTreeMap::new();
        let mut any = BTreeMap::new();
        for row in reader.deserialize::<SummaryRow>() {
            let row = row.map_err(|e| read_err(&e))?;
            if row.operation != "maj_x" {
                continue;
            }
            let Some(x) = row.x else { continue };
            let key = (x, row.n);
            let best = |m: &mut BTreeMap<(usize, usize), f64>| {
                let e = m.entry(key).or_insert(f64::MIN);
                *e = e.max(row.mean);
            };
            best(&mut any);
            if row.pattern == "random" {
                best(&mut random);
            }
        }
        for (k, v) in any {
            random.entry(k).or_insert(v);
        }
        if random.is_empty() {
            return Err(read_err(&"no maj_x rows"));
        }
        let usable = random
            .into_iter()
            .map(|((x, n), fraction)| UsableEntry { x, n, fraction })
            .collect();
        Self::new(LatencyTable::from_profile(profile), usable)
    }

    pub fn with_mode(mut self, mode: ThroughputModel) -> Self {
        self.mode = mode;
        self
    }

    pub fn usable_fraction(&self, x: usize, n: usize) -> Result<f64> {
        self.usable
            .iter()
            .find(|e| e.x == x && e.n == n)
            .map(|e| e.fraction)
            .ok_or(CaseError::MissingCost { x, n })
    }

    /// Activation count that maximizes single-op throughput for MAJ-X.
    pub fn best_n(&self, x: usize) -> Result<usize> {
        if !MAJ_WIDTHS.contains(&x) {
            return Err(CaseError::InvalidWidth(x));
        }
        let mut best: Option<(f64, usize)> = None;
        for &n in ACTIVATION_COUNTS.iter().filter(|&&n| n >= x) {
            let Ok(p) = self.usable_fraction(x, n) else { continue };
            let rate = p / self.latency.maj_total(x, n)?;
            match best {
                Some((b, _)) if rate <= b => {}
                _ => best = Some((rate, n)),
            }
        }
        best.map(|(_, n)| n).ok_or(CaseError::NoActivationCount(x))
    }
}

#[derive(Debug, Deserialize)]
struct SummaryRow {
    operation: String,
    x: Option<usize>,
    n: usize,
    pattern: String,
    mean: f64,
}
