//! PUD primitives built on the bank: MAJ-X with input replication, Frac,
//! RowClone, Multi-RowCopy, and the per-cell success metric.

use serde::{Deserialize, Serialize};

use crate::bank::{Bank, Command, CommandSequence, Phase};
use crate::decoder::{join_address, split_address};
use crate::error::{Error, Result};
use crate::timing::{classify_timing, ActivationMode, SenseMode};

pub const MAJ_WIDTHS: [usize; 4] = [3, 5, 7, 9];
pub const ACTIVATION_COUNTS: [usize; 4] = [4, 8, 16, 32];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowRole {
    Operand(usize),
    Neutral,
}

/// Where in the ascending activation set the neutral rows go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NeutralPlacement {
    #[default]
    Highest,
    Lowest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicationPlan {
    pub x: usize,
    pub n: usize,
    pub copies: usize,
    pub neutral_count: usize,
    /// Role of the i-th lowest row of the activation set.
    pub roles: Vec<RowRole>,
}

pub fn plan_replication(x: usize, n: usize) -> Result<ReplicationPlan> {
    plan_replication_with(x, n, NeutralPlacement::Highest)
}

pub fn plan_replication_with(x: usize, n: usize, placement: NeutralPlacement) -> Result<ReplicationPlan> {
    if !MAJ_WIDTHS.contains(&x) {
        return Err(Error::InvalidReplication(format!("X={x} is not one of 3, 5, 7, 9")));
    }
    if !ACTIVATION_COUNTS.contains(&n) {
        return Err(Error::InvalidReplication(format!("N={n} is not one of 4, 8, 16, 32")));
    }
    if n < x {
        return Err(Error::InvalidReplication(format!("N={n} < X={x}")));
    }
    let copies = n / x;
    let neutral_count = n % x;
    let operands = (0..copies * x).map(|i| RowRole::Operand(i % x));
    let neutrals = std::iter::repeat_n(RowRole::Neutral, neutral_count);
    let roles = match placement {
        NeutralPlacement::Highest => operands.chain(neutrals).collect(),
        NeutralPlacement::Lowest => neutrals.chain(operands).collect(),
    };
    Ok(ReplicationPlan {
        x,
        n,
        copies,
        neutral_count,
        roles,
    })
}

impl ReplicationPlan {
    /// Every valid (X, N) combination.
    pub fn all_valid() -> Vec<Self> {
        MAJ_WIDTHS
            .iter()
            .flat_map(|&x| {
                ACTIVATION_COUNTS
                    .iter()
                    .filter_map(move |&n| plan_replication(x, n).ok())
            })
            .collect()
    }

    /// Pair each row of an ascending activation set with its role.
    pub fn assign(&self, rows: &[u32]) -> Result<Vec<(u32, RowRole)>> {
        if rows.len() != self.n {
            return Err(Error::InvalidReplication(format!(
                "activation set has {} rows, plan needs {}",
                rows.len(),
                self.n
            )));
        }
        Ok(rows.iter().copied().zip(self.roles.iter().copied()).collect())
    }
}

/// Strict Boolean majority.
pub fn majority(bits: &[bool]) -> bool {
    2 * bits.iter().filter(|&&b| b).count() > bits.len()
}

/// Column-wise majority of operand rows.
pub fn majority_columns(operands: &[Vec<bool>]) -> Vec<bool> {
    let cols = operands.first().map_or(0, Vec::len);
    (0..cols)
        .map(|c| 2 * operands.iter().filter(|o| o[c]).count() > operands.len())
        .collect()
}

/// Put a set of rows into the neutral state. Chips whose amplifier leans
/// toward one value get the opposite value instead, so an evenly split
/// column falls to the bias.
pub fn frac_init(bank: &mut Bank, rows: &[u32]) -> Result<()> {
    let Some(&first) = rows.first() else { return Ok(()) };
    let (sa, _) = split_address(first, bank.profile())?;
    let mut locals = Vec::with_capacity(rows.len());
    for &r in rows {
        let (s, l) = split_address(r, bank.profile())?;
        if s != sa {
            return Err(Error::SubarrayMismatch(first, r));
        }
        locals.push(l);
    }
    let analog = bank.analog().clone();
    let sub = bank.subarray_mut(sa);
    for l in locals {
        let fill: Vec<f64> = match analog.mfr_m_bias {
            Some(b) => vec![f64::from(u8::from(!b.toward)); sub.columns],
            None => (0..sub.columns)
                .map(|c| analog.neutral_charge(sub.cell(l, c).frac_u))
                .collect(),
        };
        *sub.row_mut(l) = fill;
    }
    Ok(())
}

/// Bring the bank back to Precharged with a nominal PRE if needed.
fn settle(bank: &mut Bank) -> Result<()> {
    let st = bank.state();
    if st.phase != Phase::Precharged || st.pending_precharge.is_some() {
        let t_rp = bank.profile().timing.t_rp;
        bank.apply_command(&Command::pre(t_rp))?;
        bank.apply_command(&Command::refresh(bank.profile().timing.granularity))?;
    }
    Ok(())
}

/// Nominal write of one row.
pub fn write_row(bank: &mut Bank, row: u32, bits: &[bool]) -> Result<()> {
    settle(bank)?;
    let seq = CommandSequence::nominal_write(row, bits.to_vec(), bank.profile());
    bank.execute_sequence(&seq)?;
    Ok(())
}

/// Nominal read of one row: sensed bits and per-column reliability.
pub fn read_row(bank: &mut Bank, row: u32) -> Result<(Vec<bool>, Vec<bool>)> {
    settle(bank)?;
    let t = bank.profile().timing;
    bank.apply_command(&Command::act(row, t.t_ras))?;
    let ev = bank.apply_command(&Command::rd(t.granularity))?;
    let reliable = bank.state().reliable.clone();
    bank.apply_command(&Command::pre(t.t_rp))?;
    Ok((ev.read.expect("RD returns data"), reliable))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajOutcome {
    pub result: Vec<bool>,
    pub reliable: Vec<bool>,
    /// Bank rows the APA actually opened.
    pub activated: Vec<u32>,
}

/// MAJ-X of `operands` over the activation set of `pair`.
pub fn maj_x(
    bank: &mut Bank,
    pair: (u32, u32),
    plan: &ReplicationPlan,
    operands: &[Vec<bool>],
    t1: f64,
    t2: f64,
) -> Result<MajOutcome> {
    if operands.len() != plan.x {
        return Err(Error::OperandCount {
            expected: plan.x,
            got: operands.len(),
        });
    }
    let cols = bank.profile().columns;
    if let Some(bad) = operands.iter().find(|o| o.len() != cols) {
        return Err(Error::WidthMismatch {
            expected: cols,
            got: bad.len(),
        });
    }
    let regime = classify_timing(t1, t2, bank.profile());
    if regime.activation_mode != ActivationMode::SimultaneousUnion || regime.sense_mode != SenseMode::ChargeSharing {
        return Err(Error::RegimeMismatch {
            expected: "SimultaneousUnion/ChargeSharing",
            got: regime.to_string(),
            t1,
            t2,
        });
    }
    let (sa, first) = split_address(pair.0, bank.profile())?;
    let (sb, second) = split_address(pair.1, bank.profile())?;
    if sa != sb {
        return Err(Error::SubarrayMismatch(pair.0, pair.1));
    }
    let locals = bank.decoder().activation_set(first, second)?;
    let assignment = plan.assign(&locals)?;

    let mut neutral = Vec::new();
    for &(l, role) in &assignment {
        let row = join_address(sa, l, bank.profile());
        match role {
            RowRole::Operand(i) => write_row(bank, row, &operands[i])?,
            RowRole::Neutral => neutral.push(row),
        }
    }
    frac_init(bank, &neutral)?;

    let timing = bank.profile().timing;
    let trace = bank.execute_sequence(&CommandSequence {
        commands: vec![
            Command::act(pair.0, t1),
            Command::pre(t2),
            Command::act(pair.1, timing.t_ras),
            Command::rd(timing.granularity),
        ],
    })?;
    let reliable = bank.state().reliable.clone();
    let activated = trace.events[2].activated.clone();
    let result = trace.events[3].read.clone().expect("RD returns data");
    bank.apply_command(&Command::pre(timing.t_rp))?;
    Ok(MajOutcome {
        result,
        reliable,
        activated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopyOutcome {
    pub destinations: Vec<u32>,
    /// Per destination row, per column: read back equal to the source and
    /// sensed reliably.
    pub correct: Vec<Vec<bool>>,
}

impl CopyOutcome {
    pub fn fraction(&self) -> f64 {
        let total: usize = self.correct.iter().map(Vec::len).sum();
        if total == 0 {
            return 1.0;
        }
        self.correct.iter().flatten().filter(|&&c| c).count() as f64 / total as f64
    }

    pub fn all_correct(&self) -> bool {
        self.correct.iter().flatten().all(|&c| c)
    }
}

fn check_rows(bank: &mut Bank, rows: &[u32], expected: &[bool]) -> Result<Vec<Vec<bool>>> {
    rows.iter()
        .map(|&r| {
            let (bits, reliable) = read_row(bank, r)?;
            Ok(bits
                .iter()
                .zip(&reliable)
                .zip(expected)
                .map(|((&b, &ok), &e)| ok && b == e)
                .collect())
        })
        .collect()
}

/// Copy `source` into every other row of the activation set of
/// `(source, partner)` with one APA.
pub fn multi_row_copy(bank: &mut Bank, source: u32, pair: (u32, u32), t1: f64, t2: f64) -> Result<CopyOutcome> {
    let (sa, first) = split_address(pair.0, bank.profile())?;
    let (sb, second) = split_address(pair.1, bank.profile())?;
    if sa != sb {
        return Err(Error::SubarrayMismatch(pair.0, pair.1));
    }
    let locals = bank.decoder().activation_set(first, second)?;
    let set: Vec<u32> = locals.iter().map(|&l| join_address(sa, l, bank.profile())).collect();
    if !set.contains(&source) {
        return Err(Error::SourceNotInActivation(source));
    }
    if source != pair.0 {
        return Err(Error::SourceNotFirst(source));
    }
    settle(bank)?;
    let expected = bank.peek_row(source)?;
    let timing = bank.profile().timing;
    bank.execute_sequence(&CommandSequence {
        commands: vec![
            Command::act(pair.0, t1),
            Command::pre(t2),
            Command::act(pair.1, timing.t_ras),
            Command::pre(timing.t_rp),
        ],
    })?;
    let destinations: Vec<u32> = set.into_iter().filter(|&r| r != source).collect();
    let correct = check_rows(bank, &destinations, &expected)?;
    Ok(CopyOutcome { destinations, correct })
}

/// Two-row consecutive activation copying `src` into `dst`. A copy across
/// subarrays is attempted like any other and simply does not land.
pub fn row_clone(bank: &mut Bank, src: u32, dst: u32) -> Result<CopyOutcome> {
    let cols = bank.profile().columns;
    if src == dst {
        return Ok(CopyOutcome {
            destinations: vec![dst],
            correct: vec![vec![true; cols]],
        });
    }
    settle(bank)?;
    let expected = bank.peek_row(src)?;
    let timing = bank.profile().timing;
    bank.execute_sequence(&CommandSequence {
        commands: vec![
            Command::act(src, timing.t_ras),
            Command::pre(timing.row_clone_t2),
            Command::act(dst, timing.t_ras),
            Command::pre(timing.t_rp),
        ],
    })?;
    let correct = check_rows(bank, &[dst], &expected)?;
    Ok(CopyOutcome {
        destinations: vec![dst],
        correct,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessRateReport {
    /// Correct in every trial.
    pub stable: Vec<bool>,
    pub trials: usize,
    pub fraction: f64,
    /// Per-group fractions, when aggregated over groups.
    pub group_samples: Vec<f64>,
}

/// Accumulates per-cell stability trial by trial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StabilityTracker {
    stable: Vec<bool>,
    trials: usize,
}

impl StabilityTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, outcome: &[bool]) -> Result<()> {
        if self.trials == 0 {
            self.stable = outcome.to_vec();
        } else if outcome.len() != self.stable.len() {
            return Err(Error::RaggedOutcomes);
        } else {
            for (s, &o) in self.stable.iter_mut().zip(outcome) {
                *s &= o;
            }
        }
        self.trials += 1;
        Ok(())
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn fraction(&self) -> f64 {
        if self.stable.is_empty() {
            return 0.0;
        }
        self.stable.iter().filter(|&&s| s).count() as f64 / self.stable.len() as f64
    }

    pub fn report(self) -> Result<SuccessRateReport> {
        if self.trials == 0 || self.stable.is_empty() {
            return Err(Error::RaggedOutcomes);
        }
        let fraction = self.fraction();
        Ok(SuccessRateReport {
            stable: self.stable,
            trials: self.trials,
            fraction,
            group_samples: vec![fraction],
        })
    }
}

/// Stability of each cell across a trials × cells outcome matrix.
pub fn success_rate(outcomes: &[Vec<bool>]) -> Result<SuccessRateReport> {
    let mut t = StabilityTracker::new();
    for row in outcomes {
        t.record(row)?;
    }
    t.report()
}
