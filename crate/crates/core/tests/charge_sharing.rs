use proptest::prelude::*;
use pudsim_core::analog::{charge_share, monte_carlo_success, sense_with_offset, AnalogParams, ColumnModel, ShareCell};

fn cell(charge: f64, capacitance: f64) -> ShareCell {
    ShareCell {
        charge,
        capacitance,
        efficiency: 1.0,
        weight: 1.0,
    }
}

#[test]
fn frozen_divider_values() {
    let p = AnalogParams::default();
    let one = charge_share(&[ShareCell::ideal(1.0)], &p).unwrap();
    assert!((one - 0.071_428_571_4).abs() < 1e-9);
    let maj = charge_share(&[1.0, 1.0, 0.0].map(ShareCell::ideal), &p).unwrap();
    assert!((maj - 0.055_555_555_6).abs() < 1e-9);
}

#[test]
fn ideal_sensing_matches_majority_up_to_nine_cells() {
    let p = AnalogParams::ideal();
    for n in 1..=9usize {
        for mask in 0u32..(1 << n) {
            let ones = mask.count_ones() as usize;
            if 2 * ones == n {
                continue;
            }
            let cells: Vec<_> = (0..n).map(|i| ShareCell::ideal(f64::from((mask >> i) & 1))).collect();
            let out = sense_with_offset(charge_share(&cells, &p).unwrap(), 0.0, &p);
            assert_eq!(out.value, 2 * ones > n, "n={n} mask={mask:b}");
        }
    }
}

#[test]
fn replication_raises_mean_perturbation() {
    let mut p = AnalogParams::default();
    let mut last = 0.0;
    for pct in [0.0, 10.0, 20.0, 30.0, 40.0] {
        p.variation_pct = pct;
        last = 0.0;
        for n in [4, 8, 16, 32] {
            let m = ColumnModel::replicated_majority(&[true, true, false], n).unwrap();
            let s = monte_carlo_success(&m, &p, 4000, 17);
            assert!(s.mean_abs_perturbation >= last - 1e-3, "pct {pct} n {n}");
            last = s.mean_abs_perturbation;
        }
    }
    assert!(last > 0.0);
}

fn charges() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..=1.0, 0.5f64..1.5), 1..33)
}

proptest! {
    #[test]
    fn charged_cell_never_lowers_the_bitline(cells in charges(), cap in 0.5f64..1.5) {
        let p = AnalogParams::default();
        let base: Vec<_> = cells.iter().map(|&(q, c)| cell(q, c)).collect();
        let before = charge_share(&base, &p).unwrap();
        let mut up = base.clone();
        up.push(cell(1.0, cap));
        let mut down = base;
        down.push(cell(0.0, cap));
        prop_assert!(charge_share(&up, &p).unwrap() >= before - 1e-12);
        prop_assert!(charge_share(&down, &p).unwrap() <= before + 1e-12);
    }

    #[test]
    fn scaling_all_capacitances_keeps_the_perturbation(cells in charges(), k in 0.1f64..10.0) {
        let mut p = AnalogParams::default();
        let base: Vec<_> = cells.iter().map(|&(q, c)| cell(q, c)).collect();
        let a = charge_share(&base, &p).unwrap();
        let scaled: Vec<_> = cells.iter().map(|&(q, c)| cell(q, c * k)).collect();
        p.bitline_ratio *= k;
        let b = charge_share(&scaled, &p).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn neutral_rows_never_flip_the_sign(bits in prop::collection::vec(any::<bool>(), 1..10), extra in 1usize..6) {
        let p = AnalogParams::ideal();
        let base: Vec<_> = bits.iter().map(|&b| ShareCell::ideal(f64::from(u8::from(b)))).collect();
        let a = charge_share(&base, &p).unwrap();
        let mut padded = base.clone();
        padded.extend(std::iter::repeat_n(ShareCell::ideal(0.5), extra));
        let b = charge_share(&padded, &p).unwrap();
        prop_assert_eq!(a.signum(), b.signum());
        prop_assert!(b.abs() <= a.abs() + 1e-12);
        let scale = (p.bitline_ratio + base.len() as f64) / (p.bitline_ratio + padded.len() as f64);
        prop_assert!((b - a * scale).abs() < 1e-12);
    }

    #[test]
    fn perturbation_stays_in_range(cells in charges()) {
        let base: Vec<_> = cells.iter().map(|&(q, c)| cell(q, c)).collect();
        let v = charge_share(&base, &AnalogParams::default()).unwrap();
        prop_assert!((-0.5..=0.5).contains(&v));
    }
}
