use std::fs;

use proptest::prelude::*;
use pudsim_core::{Bank, DataPattern, DeviceProfile};
use pudsim_harness::{
    discover_subarrays, export, run_experiment, run_maj_sweep, ExperimentConfig, Format, HarnessError, OperationKind,
    ParamReport, Summary,
};

fn tiny(op: OperationKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::for_operation(op);
    c.banks = 1;
    c.subarrays_per_bank = 2;
    c.groups_per_subarray = 3;
    c.columns = Some(64);
    c.trials = 3;
    c.seed = 11;
    c
}

fn mean_of(reports: &[ParamReport], f: impl Fn(&ParamReport) -> bool) -> f64 {
    let hits: Vec<_> = reports.iter().filter(|r| f(r)).collect();
    assert_eq!(hits.len(), 1, "expected exactly one matching report");
    hits[0].summary.mean
}

#[test]
fn same_seed_gives_identical_files() {
    let mut c = tiny(OperationKind::MajX);
    c.n = vec![8];
    c.patterns = vec![DataPattern::Random, "cc33".parse().unwrap()];
    let a = run_experiment(&c, Some(1)).unwrap();
    let b = run_experiment(&c, Some(4)).unwrap();
    assert_eq!(a, b, "worker count must not change results");

    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for format in [Format::Csv, Format::Json] {
        let f1 = export(&a, d1.path(), format).unwrap();
        let f2 = export(&b, d2.path(), format).unwrap();
        for (x, y) in f1.iter().zip(&f2) {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
        }
    }
}

#[test]
fn different_seed_changes_samples() {
    let c = tiny(OperationKind::ActivationTest);
    let mut d = c.clone();
    d.seed += 1;
    let a = run_experiment(&c, None).unwrap();
    let b = run_experiment(&d, None).unwrap();
    let rows = |r: &[ParamReport]| {
        r.iter()
            .flat_map(|p| p.samples.iter().map(|s| s.first_row))
            .collect::<Vec<_>>()
    };
    assert_ne!(rows(&a), rows(&b));
}

#[test]
fn reports_cover_the_grid_in_canonical_order() {
    let c = tiny(OperationKind::MajX);
    let reports = run_maj_sweep(&c, None).unwrap();
    // (X, N) pairs with N >= X: 4 + 3 + 3 + 2, times four timing points
    assert_eq!(reports.len(), 12 * 4);
    for w in reports.windows(2) {
        assert!(w[0].key.canonical_cmp(&w[1].key).is_lt());
    }
    for r in &reports {
        let s = r.summary;
        assert_eq!(s.count, c.groups());
        assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
        assert!((0.0..=1.0).contains(&s.min) && s.max <= 1.0);
        assert!(r.key.x.unwrap() <= r.key.n as usize);
    }
}

#[test]
fn wrong_kind_wrapper_is_rejected() {
    let c = tiny(OperationKind::ActivationTest);
    assert!(matches!(run_maj_sweep(&c, None), Err(HarnessError::Config(_))));
}

#[test]
fn export_layout() {
    let mut c = tiny(OperationKind::MultiRowCopy);
    c.n = vec![2, 4];
    c.t1 = vec![36.0];
    c.t2 = vec![3.0];
    let reports = run_experiment(&c, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = export(&reports, dir.path(), Format::Csv).unwrap();
    let names: Vec<_> = files.iter().map(|p| p.file_name().unwrap().to_str().unwrap()).collect();
    assert_eq!(names, ["summary.csv", "groups.csv", "plot.csv"]);

    let summary = fs::read_to_string(&files[0]).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "operation,x,n,t1,t2,pattern,temperature_c,vpp,trials,groups,mean,min,q1,median,q3,max"
    );
    assert_eq!(lines.count(), 2);
    let groups = fs::read_to_string(&files[1]).unwrap();
    assert_eq!(groups.lines().count(), 1 + 2 * c.groups());
    let plot = fs::read_to_string(&files[2]).unwrap();
    assert!(plot.starts_with("series,x,y\n"));
}

#[test]
fn empty_export_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = export(&[], dir.path(), Format::Csv).unwrap_err();
    assert!(matches!(err, HarnessError::EmptyReports));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn config_round_trips_through_toml() {
    let mut c = tiny(OperationKind::MajX);
    c.x = vec![3, 5];
    c.patterns = vec![DataPattern::Random, "00ff".parse().unwrap()];
    c.temperatures = vec![50.0, 90.0];
    let back = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn config_rejects_bad_input() {
    assert!(matches!(
        ExperimentConfig::from_toml_str("operation = \"maj_x\"\nbogus = 1\n"),
        Err(HarnessError::Parse(_))
    ));
    let p = DeviceProfile::preset("mfrH-512").unwrap();
    let mut c = tiny(OperationKind::ActivationTest);
    c.t1 = vec![2.0];
    assert!(c.validate(&p).unwrap_err().is_validation());
    let mut c = tiny(OperationKind::ActivationTest);
    c.n = vec![64];
    assert!(c.validate(&p).is_err());
    let mut c = tiny(OperationKind::MajX);
    c.t1 = vec![36.0];
    assert!(c.validate(&p).is_err(), "MAJ needs charge-sharing timing");
    let mut c = tiny(OperationKind::ActivationTest);
    c.trials = 0;
    assert!(c.validate(&p).is_err());
}

fn discovered(name: &str) -> (DeviceProfile, Vec<u32>) {
    let p = DeviceProfile::preset(name).unwrap().with_columns(32);
    let mut bank = Bank::new(p.clone(), 3).unwrap();
    let ranges = discover_subarrays(&mut bank, 9).unwrap();
    (p, ranges.iter().map(|r| r.start).collect())
}

#[test]
fn discovery_finds_every_boundary() {
    for name in ["mfrH-512", "mfrH-640", "mfrM-1024"] {
        let (p, starts) = discovered(name);
        let expect: Vec<u32> = (0..p.subarrays_per_bank).map(|i| i * p.rows_per_subarray).collect();
        assert_eq!(starts, expect, "{name}");
    }
    let (_, starts) = discovered("demo-8");
    assert_eq!(starts, [0]);
}

#[test]
fn short_timing_hurts_activation() {
    let mut c = tiny(OperationKind::ActivationTest);
    c.n = vec![8];
    c.columns = Some(256);
    c.groups_per_subarray = 6;
    let r = run_experiment(&c, None).unwrap();
    let at = |t1: f64, t2: f64| mean_of(&r, |p| p.key.t1 == t1 && p.key.t2 == t2);
    assert!(at(3.0, 3.0) >= 0.999);
    assert!(at(1.5, 1.5) < at(1.5, 3.0));
    assert!(at(1.5, 3.0) < at(3.0, 3.0));
}

#[test]
fn multi_row_copy_needs_a_latched_source() {
    let mut c = tiny(OperationKind::MultiRowCopy);
    c.n = vec![4, 32];
    c.t2 = vec![3.0];
    c.t1 = vec![1.5, 36.0];
    c.columns = Some(128);
    let r = run_experiment(&c, None).unwrap();
    for n in [4, 32] {
        let long = mean_of(&r, |p| p.key.n == n && p.key.t1 == 36.0);
        let short = mean_of(&r, |p| p.key.n == n && p.key.t1 == 1.5);
        assert!(long >= 0.99, "N={n}: {long}");
        assert!(long - short >= 0.3, "N={n}: {long} vs {short}");
    }
}

proptest! {
    #[test]
    fn summary_is_ordered(values in prop::collection::vec(0.0f64..=1.0, 1..40)) {
        let s = Summary::of(&values).unwrap();
        prop_assert_eq!(s.count, values.len());
        prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
        prop_assert!(s.min <= s.mean + 1e-12 && s.mean <= s.max + 1e-12);
    }

    #[test]
    fn summary_ignores_order(mut values in prop::collection::vec(0.0f64..=1.0, 1..40)) {
        let a = Summary::of(&values).unwrap();
        values.reverse();
        let b = Summary::of(&values).unwrap();
        prop_assert_eq!((a.min, a.q1, a.median, a.q3, a.max), (b.min, b.q1, b.median, b.q3, b.max));
    }
}

#[test]
fn summary_hinges_on_known_samples() {
    let s = Summary::of(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    assert_eq!((s.q1, s.median, s.q3), (2.0, 3.0, 4.0));
    let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!((s.q1, s.median, s.q3), (1.5, 2.5, 3.5));
    assert!(Summary::of(&[]).is_none());
}
