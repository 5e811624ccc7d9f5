//! Characterization runs: activation test, MAJ-X sweep, Multi-RowCopy sweep.
//!
//! Each (row group, activation count) is one work item. Inside it every
//! other parameter combination starts from the same cell variation and the
//! same noise stream, so knob effects are measured on paired samples.

use std::cmp::Ordering;

use pudsim_core::analog::Environment;
use pudsim_core::ops::{self, majority_columns, plan_replication, StabilityTracker};
use pudsim_core::seed::{derive, rng_for};
use pudsim_core::{Bank, Command, CommandSequence, DataPattern, DeviceProfile, RowDecoder};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, OperationKind};
use crate::error::{HarnessError, Result};
use crate::sampling::{sample_groups, RowGroup};
use crate::stats::Summary;

const VARIATION_STREAM: u64 = 0x5641_5249;
const NOISE_STREAM: u64 = 0x4e4f_4953;
const DATA_STREAM: u64 = 0x4441_5441;
const WRITE_STREAM: u64 = 0x5752_4954;
const POLARITY_STREAM: u64 = 0x504f_4c41;

/// One point of the parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamKey {
    pub operation: OperationKind,
    pub x: Option<usize>,
    pub n: u32,
    pub t1: f64,
    pub t2: f64,
    pub pattern: String,
    pub temperature_c: f64,
    pub vpp: f64,
}

impl ParamKey {
    pub fn canonical_cmp(&self, o: &Self) -> Ordering {
        self.operation
            .cmp(&o.operation)
            .then(self.x.cmp(&o.x))
            .then(self.n.cmp(&o.n))
            .then(self.t1.total_cmp(&o.t1))
            .then(self.t2.total_cmp(&o.t2))
            .then(self.pattern.cmp(&o.pattern))
            .then(self.temperature_c.total_cmp(&o.temperature_c))
            .then(self.vpp.total_cmp(&o.vpp))
    }
}

/// Success rate of one row group at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSample {
    pub bank: usize,
    pub subarray: u32,
    pub group: usize,
    pub first_row: u32,
    pub second_row: u32,
    pub success: f64,
}

/// Distribution of group success rates at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamReport {
    pub key: ParamKey,
    pub trials: usize,
    pub summary: Summary,
    pub samples: Vec<GroupSample>,
}

#[derive(Debug, Clone, PartialEq)]
struct Combo {
    x: Option<usize>,
    t1: f64,
    t2: f64,
    pattern: DataPattern,
    env: Environment,
}

fn combos(config: &ExperimentConfig) -> Vec<Combo> {
    let xs: Vec<Option<usize>> = match config.operation {
        OperationKind::MajX => config.x_grid().into_iter().map(Some).collect(),
        _ => vec![None],
    };
    let mut out = Vec::new();
    for &x in &xs {
        for &t1 in &config.t1_grid() {
            for &t2 in &config.t2_grid() {
                for pattern in config.pattern_grid() {
                    for &temperature_c in &config.temperature_grid() {
                        for &vpp in &config.vpp_grid() {
                            out.push(Combo {
                                x,
                                t1,
                                t2,
                                pattern: pattern.clone(),
                                env: Environment { temperature_c, vpp },
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Run a whole experiment on a bounded worker pool (`None` = all cores).
pub fn run_experiment(config: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<ParamReport>> {
    let profile = config.resolve_profile()?;
    config.validate(&profile)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
    pool.install(|| run_on(config, &profile))
}

pub fn run_activation_test(config: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<ParamReport>> {
    expect_kind(config, OperationKind::ActivationTest)?;
    run_experiment(config, jobs)
}

pub fn run_maj_sweep(config: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<ParamReport>> {
    expect_kind(config, OperationKind::MajX)?;
    run_experiment(config, jobs)
}

pub fn run_mrc_sweep(config: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<ParamReport>> {
    expect_kind(config, OperationKind::MultiRowCopy)?;
    run_experiment(config, jobs)
}

fn expect_kind(config: &ExperimentConfig, kind: OperationKind) -> Result<()> {
    if config.operation != kind {
        return Err(HarnessError::Config(format!(
            "expected operation {kind}, config has {}",
            config.operation
        )));
    }
    Ok(())
}

fn run_on(config: &ExperimentConfig, profile: &DeviceProfile) -> Result<Vec<ParamReport>> {
    let combos = combos(config);
    let mut groups = Vec::new();
    for n in config.n_grid() {
        groups.extend(sample_groups(config, profile, n)?);
    }
    log::info!(
        "{}: {} groups x {} parameter points, {} trials each",
        config.operation,
        groups.len(),
        combos.len(),
        config.trials
    );
    let per_group: Vec<Vec<Option<f64>>> = groups
        .par_iter()
        .map(|g| {
            combos
                .iter()
                .map(|c| run_group(config, profile, g, c))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut reports = Vec::new();
    for n in config.n_grid() {
        for (ci, c) in combos.iter().enumerate() {
            let samples: Vec<GroupSample> = groups
                .iter()
                .zip(&per_group)
                .filter(|(g, _)| g.n == n)
                .filter_map(|(g, r)| {
                    r[ci].map(|success| GroupSample {
                        bank: g.bank,
                        subarray: g.subarray,
                        group: g.index,
                        first_row: g.first,
                        second_row: g.second,
                        success,
                    })
                })
                .collect();
            let values: Vec<f64> = samples.iter().map(|s| s.success).collect();
            let Some(summary) = Summary::of(&values) else { continue };
            reports.push(ParamReport {
                key: ParamKey {
                    operation: config.operation,
                    x: c.x,
                    n,
                    t1: c.t1,
                    t2: c.t2,
                    pattern: c.pattern.to_string(),
                    temperature_c: c.env.temperature_c,
                    vpp: c.env.vpp,
                },
                trials: config.trials,
                summary,
                samples,
            });
        }
    }
    reports.sort_by(|a, b| a.key.canonical_cmp(&b.key));
    Ok(reports)
}

/// Group success rate, or `None` when the combination does not apply
/// (MAJ-X with fewer rows than operands).
fn run_group(config: &ExperimentConfig, profile: &DeviceProfile, g: &RowGroup, c: &Combo) -> Result<Option<f64>> {
    if let Some(x) = c.x {
        if (g.n as usize) < x {
            return Ok(None);
        }
    }
    let key = g.key();
    let mut bank = Bank::with_seeds(
        profile.clone(),
        c.pattern.clone(),
        derive(config.seed, &[DATA_STREAM, key[0], key[1], key[2], key[3]]),
        derive(config.seed, &[VARIATION_STREAM, g.bank as u64]),
        derive(config.seed, &[NOISE_STREAM, key[0], key[1], key[2], key[3]]),
    )?;
    bank.set_environment(c.env)?;
    let mut tracker = StabilityTracker::new();
    let polarity = {
        let mut rng = rng_for(config.seed, &[POLARITY_STREAM, key[0], key[1], key[2], key[3]]);
        (0..9).map(|_| rng.random::<bool>()).collect::<Vec<_>>()
    };
    for trial in 0..config.trials {
        let seed = derive(
            config.seed,
            &[WRITE_STREAM, key[0], key[1], key[2], key[3], trial as u64],
        );
        bank.refill(c.pattern.clone(), seed);
        let outcome = match config.operation {
            OperationKind::ActivationTest => activation_trial(&mut bank, g, c, seed)?,
            OperationKind::MajX => maj_trial(&mut bank, g, c, &polarity, seed)?,
            OperationKind::MultiRowCopy => mrc_trial(&mut bank, g, c)?,
        };
        tracker.record(&outcome)?;
    }
    Ok(Some(tracker.fraction()))
}

fn random_row(cols: usize, seed: u64, stream: u64) -> Vec<bool> {
    let mut rng = rng_for(seed, &[stream]);
    (0..cols).map(|_| rng.random()).collect()
}

/// APA, WR of fresh data, then nominal read-back of every row the decoder
/// says should have opened.
fn activation_trial(bank: &mut Bank, g: &RowGroup, c: &Combo, seed: u64) -> Result<Vec<bool>> {
    let profile = bank.profile().clone();
    let t = profile.timing;
    let cols = profile.columns;
    let data = random_row(cols, seed, 0);
    let mut seq = CommandSequence::apa(g.first, g.second, c.t1, c.t2, t.t_ras);
    seq.push(Command::wr(data.clone(), t.granularity));
    seq.push(Command::pre(t.t_rp));
    bank.execute_sequence(&seq)?;
    let mut outcome = Vec::with_capacity(cols * g.n as usize);
    for row in expected_rows(&profile, g)? {
        let (bits, reliable) = ops::read_row(bank, row)?;
        outcome.extend(
            bits.iter()
                .zip(&reliable)
                .zip(&data)
                .map(|((&b, &ok), &d)| ok && b == d),
        );
    }
    Ok(outcome)
}

fn expected_rows(profile: &DeviceProfile, g: &RowGroup) -> Result<Vec<u32>> {
    let (sa, a) = pudsim_core::split_address(g.first, profile)?;
    let (_, b) = pudsim_core::split_address(g.second, profile)?;
    let locals = RowDecoder::from_profile(profile).activation_set(a, b)?;
    Ok(locals
        .into_iter()
        .map(|l| pudsim_core::decoder::join_address(sa, l, profile))
        .collect())
}

/// Random operands are redrawn every trial; fixed patterns keep a per-group
/// polarity for each operand.
fn maj_trial(bank: &mut Bank, g: &RowGroup, c: &Combo, polarity: &[bool], seed: u64) -> Result<Vec<bool>> {
    let x = c.x.expect("MAJ combos carry a width");
    let cols = bank.profile().columns;
    let operands: Vec<Vec<bool>> = (0..x)
        .map(|i| match &c.pattern {
            DataPattern::Random => random_row(cols, seed, 1 + i as u64),
            DataPattern::Fixed(p) => (0..cols).map(|col| p.bit(col, polarity[i])).collect(),
            DataPattern::Solid(b) => vec![*b ^ polarity[i]; cols],
            DataPattern::Matrix(_) => unreachable!("rejected by config validation"),
        })
        .collect();
    let plan = plan_replication(x, g.n as usize)?;
    let out = ops::maj_x(bank, g.pair(), &plan, &operands, c.t1, c.t2)?;
    let expected = majority_columns(&operands);
    Ok(out
        .result
        .iter()
        .zip(&out.reliable)
        .zip(&expected)
        .map(|((&r, &ok), &e)| ok && r == e)
        .collect())
}

/// Fixed patterns put the complement of the source into every destination
/// so a missed copy is always visible; random data stays independent.
fn mrc_trial(bank: &mut Bank, g: &RowGroup, c: &Combo) -> Result<Vec<bool>> {
    if !c.pattern.is_random() {
        let source = bank.peek_row(g.first)?;
        let inverse: Vec<bool> = source.iter().map(|b| !b).collect();
        for row in expected_rows(bank.profile(), g)? {
            if row != g.first {
                bank.load_row(row, &inverse)?;
            }
        }
    }
    let out = ops::multi_row_copy(bank, g.first, g.pair(), c.t1, c.t2)?;
    Ok(out.correct.into_iter().flatten().collect())
}
