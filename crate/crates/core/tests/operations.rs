use proptest::prelude::*;
use pudsim_core::analog::{charge_share, ShareCell};
use pudsim_core::ops::{self, frac_init, maj_x, majority_columns, multi_row_copy, row_clone, StabilityTracker};
use pudsim_core::seed::rng_for;
use pudsim_core::{AnalogParams, Bank, DataPattern, DeviceProfile, Error, ReplicationPlan};

fn ideal_bank(columns: usize, seed: u64) -> Bank {
    let mut p = DeviceProfile::preset("mfrH-512").unwrap().with_columns(columns);
    p.analog = AnalogParams::ideal();
    Bank::new(p, seed).unwrap()
}

/// Column `c` of operand `i` holds bit `i` of `c`, so one call covers every input.
fn truth_table_operands(x: usize) -> Vec<Vec<bool>> {
    (0..x)
        .map(|i| (0..1usize << x).map(|c| (c >> i) & 1 == 1).collect())
        .collect()
}

#[test]
fn replicated_majority_is_plain_majority_for_every_plan() {
    for plan in ReplicationPlan::all_valid() {
        let operands = truth_table_operands(plan.x);
        let mut bank = ideal_bank(1 << plan.x, plan.n as u64);
        let pair = bank
            .decoder()
            .find_pair_for_count(plan.n as u32, &mut rng_for(1, &[plan.n as u64]))
            .unwrap();
        let out = maj_x(&mut bank, pair, &plan, &operands, 1.5, 3.0).unwrap();
        assert_eq!(out.activated.len(), plan.n);
        assert_eq!(out.result, majority_columns(&operands), "MAJ{} N={}", plan.x, plan.n);
        if plan.x == 3 {
            assert!(out.reliable.iter().all(|&r| r), "MAJ3 N={}", plan.n);
        }
    }
}

#[test]
fn maj_overwrites_every_activated_row() {
    let plan = ops::plan_replication(3, 8).unwrap();
    let operands = truth_table_operands(3);
    let mut bank = ideal_bank(8, 4);
    let pair = bank.decoder().find_pair_for_count(8, &mut rng_for(2, &[])).unwrap();
    let out = maj_x(&mut bank, pair, &plan, &operands, 1.5, 3.0).unwrap();
    for r in out.activated {
        assert_eq!(bank.peek_row(r).unwrap(), out.result);
    }
}

#[test]
fn maj_rejects_latched_timings_and_bad_operands() {
    let plan = ops::plan_replication(3, 4).unwrap();
    let mut bank = ideal_bank(4, 1);
    let ops3 = vec![vec![true; 4]; 3];
    assert!(matches!(
        maj_x(&mut bank, (0, 7), &plan, &ops3, 36.0, 3.0),
        Err(Error::RegimeMismatch { .. })
    ));
    assert!(matches!(
        maj_x(&mut bank, (0, 7), &plan, &ops3[..2], 1.5, 3.0),
        Err(Error::OperandCount { .. })
    ));
}

#[test]
fn multi_row_copy_is_exact_when_ideal() {
    for n in [2u32, 4, 8, 16, 32] {
        for pattern in [DataPattern::Solid(false), DataPattern::Solid(true), DataPattern::Random] {
            let mut bank = ideal_bank(64, u64::from(n));
            let pair = bank
                .decoder()
                .find_pair_for_count(n, &mut rng_for(3, &[u64::from(n)]))
                .unwrap();
            bank.refill(pattern.clone(), 11);
            let source: Vec<bool> = (0..64).map(|c| c % 5 < 2).collect();
            let source = match pattern {
                DataPattern::Solid(b) => vec![b; 64],
                _ => source,
            };
            bank.load_row(pair.0, &source).unwrap();
            for r in bank.decoder().activation_set(pair.0, pair.1).unwrap() {
                if r != pair.0 {
                    let inverse: Vec<bool> = source.iter().map(|b| !b).collect();
                    bank.load_row(r, &inverse).unwrap();
                }
            }
            let out = multi_row_copy(&mut bank, pair.0, pair, 36.0, 3.0).unwrap();
            assert_eq!(out.destinations.len(), n as usize - 1);
            assert!(out.all_correct(), "N={n} pattern={pattern}");
        }
    }
}

#[test]
fn multi_row_copy_needs_the_first_row_as_source() {
    let mut bank = ideal_bank(8, 1);
    assert_eq!(
        multi_row_copy(&mut bank, 5, (0, 7), 36.0, 3.0),
        Err(Error::SourceNotInActivation(5))
    );
    assert_eq!(
        multi_row_copy(&mut bank, 7, (0, 7), 36.0, 3.0),
        Err(Error::SourceNotFirst(7))
    );
}

#[test]
fn row_clone_within_and_across_subarrays() {
    let mut bank = ideal_bank(32, 8);
    let src: Vec<bool> = (0..32).map(|c| c % 2 == 0).collect();
    let inv: Vec<bool> = src.iter().map(|b| !b).collect();
    bank.load_row(10, &src).unwrap();
    bank.load_row(300, &inv).unwrap();
    bank.load_row(700, &inv).unwrap();
    assert!(row_clone(&mut bank, 10, 300).unwrap().all_correct());
    assert_eq!(bank.peek_row(10).unwrap(), src);
    assert_eq!(bank.peek_row(300).unwrap(), src);
    assert!(!row_clone(&mut bank, 10, 700).unwrap().all_correct());
    assert!(row_clone(&mut bank, 10, 10).unwrap().all_correct());
}

#[test]
fn frac_rows_are_silent_and_idempotent() {
    let mut bank = ideal_bank(16, 2);
    frac_init(&mut bank, &[20, 21]).unwrap();
    let once = bank.peek_charges(20).unwrap();
    frac_init(&mut bank, &[20, 21]).unwrap();
    assert_eq!(bank.peek_charges(20).unwrap(), once);
    let cells: Vec<_> = once.iter().map(|&q| ShareCell::ideal(q)).collect();
    assert_eq!(charge_share(&cells[..1], &AnalogParams::ideal()).unwrap(), 0.0);
    assert!(frac_init(&mut bank, &[20, 900]).is_err());
}

#[test]
fn biased_chips_fill_neutral_rows_with_a_constant() {
    let p = DeviceProfile::preset("mfrM-1024").unwrap().with_columns(16);
    let bias = p.analog.mfr_m_bias.expect("preset carries a bias");
    let mut bank = Bank::new(p, 1).unwrap();
    frac_init(&mut bank, &[3]).unwrap();
    let charges = bank.peek_charges(3).unwrap();
    assert!(charges.iter().all(|&q| q == charges[0]));
    assert_eq!(charges[0] > 0.5, !bias.toward);
}

proptest! {
    #[test]
    fn an_extra_trial_never_makes_a_cell_stable(
        trials in prop::collection::vec(prop::collection::vec(any::<bool>(), 16), 1..8),
        extra in prop::collection::vec(any::<bool>(), 16),
    ) {
        let mut t = StabilityTracker::new();
        for row in &trials {
            t.record(row).unwrap();
        }
        let before = t.clone().report().unwrap();
        t.record(&extra).unwrap();
        let after = t.report().unwrap();
        for (b, a) in before.stable.iter().zip(&after.stable) {
            prop_assert!(!a || *b);
        }
        prop_assert!(after.fraction <= before.fraction);
    }
}
