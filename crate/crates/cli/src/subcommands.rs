//! Validation and execution of each subcommand.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pudsim_casestudies::{
    destruction_time, export as case_export, geometric_mean, speedup_table, CostModel, DestructionMethod,
    DestructionReport, Kernel, LatencyTable, SpeedupRow, Variant,
};
use pudsim_core::{Bank, CommandSequence, DeviceProfile, TraceResult};
use pudsim_harness::{discover_subarrays, export, run_experiment, ExperimentConfig, Format, OperationKind};
use serde::Serialize;

use crate::config::{load_profile, RunConfig};
use crate::error::CliError;
use crate::{Action, Cli, OutputFormat};

pub(crate) enum Prepared {
    Simulate {
        profile: DeviceProfile,
        sequence: CommandSequence,
    },
    Experiments(Vec<ExperimentConfig>),
    Bench(Vec<SpeedupRow>),
    Destroy(Vec<DestructionReport>),
    Discover(DeviceProfile),
}

/// Everything that can be rejected is rejected here, before any file
/// exists. The analytical subcommands are fully computed at this point.
pub(crate) fn prepare(action: Action, config: &RunConfig) -> Result<Prepared, CliError> {
    Ok(match action {
        Action::Simulate => {
            let s = &config.simulate;
            let profile = load_profile(&s.profile, s.columns)?;
            let sequence = if s.commands.is_empty() {
                CommandSequence::apa(0, 7, 3.0, 3.0, profile.timing.t_ras)
            } else {
                CommandSequence {
                    commands: s.commands.clone(),
                }
            };
            Prepared::Simulate { profile, sequence }
        }
        Action::Sweep => {
            validate_experiment(&config.experiment)?;
            Prepared::Experiments(vec![config.experiment.clone()])
        }
        Action::Characterize => {
            let configs: Vec<ExperimentConfig> = [
                OperationKind::ActivationTest,
                OperationKind::MajX,
                OperationKind::MultiRowCopy,
            ]
            .into_iter()
            .map(|operation| ExperimentConfig {
                operation,
                t1: Vec::new(),
                t2: Vec::new(),
                n: Vec::new(),
                x: Vec::new(),
                ..config.experiment.clone()
            })
            .collect();
            for c in &configs {
                validate_experiment(c)?;
            }
            Prepared::Experiments(configs)
        }
        Action::Bench => {
            let b = &config.bench;
            let profile = load_profile(&b.profile, None)?;
            let model = match &b.rates {
                Some(path) => CostModel::from_summary_csv(&profile, path)?,
                None => CostModel::reference(&profile),
            }
            .with_mode(b.mode);
            let kernels = if b.kernels.is_empty() {
                Kernel::ALL.to_vec()
            } else {
                b.kernels.clone()
            };
            if b.variants.is_empty() {
                return Err(CliError::validation("bench.variants is empty"));
            }
            let mut variants = Vec::new();
            for &x in &b.variants {
                if ![3, 5, 7, 9].contains(&x) {
                    return Err(CliError::validation(format!(
                        "bench variant maj{x} is not one of 3, 5, 7, 9"
                    )));
                }
                variants.push(Variant::up_to(x));
            }
            Prepared::Bench(speedup_table(&kernels, &variants, b.width, &model)?)
        }
        Action::Destroy => {
            let d = &config.destroy;
            let profile = load_profile(&d.profile, None)?;
            let latency = LatencyTable::from_profile(&profile);
            let methods = [DestructionMethod::RowCloneBased, DestructionMethod::FracBased]
                .into_iter()
                .chain(d.n.iter().map(|&n| DestructionMethod::MrcBased(n)));
            let reports = methods
                .map(|m| destruction_time(m, &profile, &latency))
                .collect::<Result<Vec<_>, _>>()?;
            Prepared::Destroy(reports)
        }
        Action::Discover => {
            let d = &config.discover;
            Prepared::Discover(load_profile(&d.profile, d.columns)?)
        }
    })
}

fn validate_experiment(c: &ExperimentConfig) -> Result<(), CliError> {
    let profile = c.resolve_profile()?;
    c.validate(&profile)?;
    Ok(())
}

fn harness_format(f: OutputFormat) -> Format {
    match f {
        OutputFormat::Csv => Format::Csv,
        OutputFormat::Json => Format::Json,
    }
}

fn case_format(f: OutputFormat) -> case_export::Format {
    match f {
        OutputFormat::Csv => case_export::Format::Csv,
        OutputFormat::Json => case_export::Format::Json,
    }
}

pub(crate) fn execute(prepared: &Prepared, config: &RunConfig, cli: &Cli, dir: &Path) -> Result<String, CliError> {
    let seed = config.effective_seed();
    let mut report = String::new();
    match prepared {
        Prepared::Simulate { profile, sequence } => {
            let mut bank = Bank::new(profile.clone(), seed)?;
            let trace = bank.execute_sequence(sequence)?;
            report = trace_text(&trace);
            write_trace(&trace, dir, cli.format)?;
        }
        Prepared::Experiments(configs) => {
            let nested = configs.len() > 1;
            for c in configs {
                let reports = run_experiment(c, cli.jobs)?;
                let target = if nested {
                    dir.join(c.operation.to_string())
                } else {
                    dir.to_path_buf()
                };
                export(&reports, &target, harness_format(cli.format))?;
                let _ = writeln!(report, "{}: {} parameter points", c.operation, reports.len());
                for r in &reports {
                    let k = &r.key;
                    let x = k.x.map_or(String::from("-"), |x| x.to_string());
                    let _ = writeln!(
                        report,
                        "  x={x} n={} t1={} t2={} {} {}C {}V mean={:.4}",
                        k.n, k.t1, k.t2, k.pattern, k.temperature_c, k.vpp, r.summary.mean
                    );
                }
            }
        }
        Prepared::Bench(rows) => {
            case_export::write_speedups(rows, dir, case_format(cli.format))?;
            for r in rows {
                let _ = writeln!(report, "{:<4} {:<5} speedup {:.3}", r.kernel, r.variant, r.speedup);
            }
            let mut names: Vec<&str> = rows.iter().map(|r| r.variant.as_str()).collect();
            names.dedup();
            names.sort_unstable();
            names.dedup();
            for name in names {
                if let Some(g) = geometric_mean(rows, name) {
                    let _ = writeln!(report, "geomean {name:<5} {g:.3}");
                }
            }
        }
        Prepared::Destroy(reports) => {
            case_export::write_destruction(reports, dir, case_format(cli.format))?;
            for r in reports {
                let _ = writeln!(
                    report,
                    "{:<9} {:>14.1} ns  speedup {:.2}",
                    r.method.to_string(),
                    r.bank_ns,
                    r.speedup_vs_rowclone
                );
            }
        }
        Prepared::Discover(profile) => {
            let mut bank = Bank::new(profile.clone(), seed)?;
            let ranges = discover_subarrays(&mut bank, seed)?;
            let rows: Vec<SubarrayLine> = ranges
                .iter()
                .enumerate()
                .map(|(i, r)| SubarrayLine {
                    subarray: i,
                    start: r.start,
                    end: r.end,
                    rows: r.len(),
                })
                .collect();
            write_table(&rows, dir, "subarrays", cli.format)?;
            for r in &rows {
                let _ = writeln!(report, "subarray {} rows {}..{}", r.subarray, r.start, r.end);
            }
        }
    }
    Ok(report)
}

#[derive(Serialize)]
struct SubarrayLine {
    subarray: usize,
    start: u32,
    end: u32,
    rows: u32,
}

#[derive(Serialize)]
struct TraceLine {
    index: usize,
    at_ns: f64,
    kind: String,
    row: Option<u32>,
    regime: Option<String>,
    activated: String,
    sensed_ones: Option<usize>,
    unreliable: Option<usize>,
}

fn trace_text(trace: &TraceResult) -> String {
    let mut s = String::new();
    for e in &trace.events {
        let row = e.row.map_or(String::new(), |r| format!(" row={r}"));
        let regime = e.regime.map_or(String::new(), |r| format!(" regime={r}"));
        let _ = writeln!(
            s,
            "{:>3} {:>9.1} ns {:?}{row}{regime} open={:?}",
            e.index, e.at_ns, e.kind, e.activated
        );
    }
    s
}

fn write_trace(trace: &TraceResult, dir: &Path, format: OutputFormat) -> Result<(), CliError> {
    match format {
        OutputFormat::Json => write_json(trace, &dir.join("trace.json")),
        OutputFormat::Csv => {
            let lines: Vec<TraceLine> = trace
                .events
                .iter()
                .map(|e| TraceLine {
                    index: e.index,
                    at_ns: e.at_ns,
                    kind: format!("{:?}", e.kind),
                    row: e.row,
                    regime: e.regime.map(|r| r.to_string()),
                    activated: e.activated.iter().map(u32::to_string).collect::<Vec<_>>().join(" "),
                    sensed_ones: e.sensed_ones,
                    unreliable: e.unreliable,
                })
                .collect();
            write_table(&lines, dir, "trace", format)
        }
    }
}

fn write_table<T: Serialize>(rows: &[T], dir: &Path, stem: &str, format: OutputFormat) -> Result<(), CliError> {
    let path = dir.join(format!("{stem}.{}", format.name()));
    match format {
        OutputFormat::Json => write_json(&rows, &path),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| CliError::runtime(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::runtime(e.to_string()))?;
            fs::write(&path, bytes).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
        }
    }
}

fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::runtime(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}
