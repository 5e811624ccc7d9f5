//! Primitive schedules and throughput comparison.

use std::collections::BTreeSet;

use pudsim_core::ops::plan_replication;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::cost::{CostModel, ThroughputModel};
use crate::error::{CaseError, Result};
use crate::lower::{lower_circuit, Kernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepKind {
    MajX { x: usize, n: usize },
    MultiRowCopy { n: usize },
    RowClone,
    FracInit,
    HostWrite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    #[serde(flatten)]
    pub kind: StepKind,
    pub latency_ns: f64,
    /// The MAJ this step prepares or performs.
    pub gate: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PudProgram {
    pub kernel: Kernel,
    pub width: usize,
    pub widths: Vec<usize>,
    pub circuit: Circuit,
    pub steps: Vec<Step>,
}

impl PudProgram {
    pub fn total_latency_ns(&self) -> f64 {
        self.steps.iter().map(|s| s.latency_ns).sum()
    }

    /// Distinct (X, N) primitives the program fires.
    pub fn primitives(&self) -> BTreeSet<(usize, usize)> {
        self.steps
            .iter()
            .filter_map(|s| match s.kind {
                StepKind::MajX { x, n } => Some((x, n)),
                _ => None,
            })
            .collect()
    }

    /// Results per nanosecond per column, under the model's throughput rule.
    pub fn throughput(&self, model: &CostModel) -> Result<f64> {
        match model.mode {
            ThroughputModel::UsableColumns => {
                let mut usable = 1.0f64;
                for (x, n) in self.primitives() {
                    usable = usable.min(model.usable_fraction(x, n)?);
                }
                Ok(usable / self.total_latency_ns())
            }
            ThroughputModel::Retry => {
                let mut time = 0.0;
                for s in &self.steps {
                    time += match s.gate {
                        Some((x, n)) => {
                            let p = model.usable_fraction(x, n)?;
                            if p == 0.0 {
                                return Ok(0.0);
                            }
                            s.latency_ns / p
                        }
                        None => s.latency_ns,
                    };
                }
                Ok(1.0 / time)
            }
        }
    }
}

/// Lower `kernel` with the MAJ widths in `widths`, each run at the
/// activation count the cost model rates best.
pub fn lower_kernel(kernel: Kernel, width: usize, widths: &[usize], model: &CostModel) -> Result<PudProgram> {
    let circuit = lower_circuit(kernel, width, widths)?;
    schedule(kernel, width, widths, circuit, model, |x| model.best_n(x))
}

/// The same kernel restricted to the baseline primitive.
pub fn lower_baseline(kernel: Kernel, width: usize, model: &CostModel) -> Result<PudProgram> {
    let (bx, bn) = model.baseline;
    let circuit = lower_circuit(kernel, width, &[bx])?;
    schedule(kernel, width, &[bx], circuit, model, |_| Ok(bn))
}

fn schedule(
    kernel: Kernel,
    width: usize,
    widths: &[usize],
    circuit: Circuit,
    model: &CostModel,
    n_for: impl Fn(usize) -> Result<usize>,
) -> Result<PudProgram> {
    let l = &model.latency;
    let mut steps = Vec::new();
    for gate in &circuit.gates {
        match gate {
            Gate::Not(_) => steps.push(Step {
                kind: StepKind::HostWrite,
                latency_ns: l.host_write_ns,
                gate: None,
            }),
            Gate::Maj(ins) => {
                let x = ins.len();
                let n = n_for(x)?;
                let plan = plan_replication(x, n)?;
                let key = Some((x, n));
                let fill = if plan.copies == 1 {
                    Step {
                        kind: StepKind::RowClone,
                        latency_ns: l.row_clone_ns,
                        gate: key,
                    }
                } else {
                    Step {
                        kind: StepKind::MultiRowCopy {
                            n: (plan.copies + 1).next_power_of_two(),
                        },
                        latency_ns: l.multi_row_copy_ns,
                        gate: key,
                    }
                };
                steps.extend(std::iter::repeat_n(fill, x));
                steps.extend(std::iter::repeat_n(
                    Step {
                        kind: StepKind::FracInit,
                        latency_ns: l.frac_ns,
                        gate: key,
                    },
                    plan.neutral_count,
                ));
                steps.push(Step {
                    kind: StepKind::MajX { x, n },
                    latency_ns: l.maj_ns,
                    gate: key,
                });
            }
        }
    }
    let mut widths = widths.to_vec();
    widths.sort_unstable();
    widths.dedup();
    Ok(PudProgram {
        kernel,
        width,
        widths,
        circuit,
        steps,
    })
}

/// Throughput of `program` over that of the baseline lowering of the same
/// kernel.
pub fn estimate_speedup(program: &PudProgram, model: &CostModel) -> Result<f64> {
    let base = lower_baseline(program.kernel, program.width, model)?;
    let ours = program.throughput(model)?;
    let theirs = base.throughput(model)?;
    if theirs == 0.0 {
        return Err(CaseError::MissingCost {
            x: model.baseline.0,
            n: model.baseline.1,
        });
    }
    Ok(ours / theirs)
}

/// A set of enabled MAJ widths, named by the widest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub widths: Vec<usize>,
}

impl Variant {
    pub fn up_to(x: usize) -> Self {
        Self {
            name: format!("maj{x}"),
            widths: [3, 5, 7, 9].into_iter().filter(|&w| w <= x).collect(),
        }
    }

    pub fn standard() -> Vec<Self> {
        [3, 5, 7, 9].into_iter().map(Self::up_to).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub kernel: Kernel,
    pub variant: String,
    pub width: usize,
    pub latency_ns: f64,
    pub baseline_latency_ns: f64,
    /// Widest MAJ the lowering actually fires.
    pub widest_used: usize,
    pub speedup: f64,
}

/// Every (kernel, variant) speedup.
pub fn speedup_table(
    kernels: &[Kernel],
    variants: &[Variant],
    width: usize,
    model: &CostModel,
) -> Result<Vec<SpeedupRow>> {
    let mut rows = Vec::new();
    for &kernel in kernels {
        let base = lower_baseline(kernel, width, model)?;
        for v in variants {
            let p = lower_kernel(kernel, width, &v.widths, model)?;
            rows.push(SpeedupRow {
                kernel,
                variant: v.name.clone(),
                width,
                latency_ns: p.total_latency_ns(),
                baseline_latency_ns: base.total_latency_ns(),
                widest_used: p.circuit.maj_counts().keys().copied().max().unwrap_or(0),
                speedup: estimate_speedup(&p, model)?,
            });
        }
    }
    Ok(rows)
}

/// Geometric mean of the speedups of one variant.
pub fn geometric_mean(rows: &[SpeedupRow], variant: &str) -> Option<f64> {
    let v: Vec<f64> = rows
        .iter()
        .filter(|r| r.variant == variant)
        .map(|r| r.speedup)
        .collect();
    if v.is_empty() {
        return None;
    }
    Some((v.iter().map(|s| s.ln()).sum::<f64>() / v.len() as f64).exp())
}
