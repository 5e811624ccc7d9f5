//! Analytical case studies on top of the pudsim primitives.
//!
//! Kernels are lowered to majority netlists, scheduled into primitive steps
//! and priced with a latency table and per-(X, N) usable-column fractions.
//! A second model prices wiping a bank with RowClone, Frac or Multi-RowCopy.

pub mod circuit;
pub mod cost;
pub mod destruction;
pub mod error;
pub mod export;
pub mod lower;
pub mod program;

pub use circuit::{Builder, Circuit, Gate, Signal};
pub use cost::{CostModel, LatencyTable, ThroughputModel, UsableEntry};
pub use destruction::{destruction_time, DestructionMethod, DestructionReport};
pub use error::{CaseError, Result};
pub use lower::{lower_circuit, Kernel};
pub use program::{
    estimate_speedup, geometric_mean, lower_baseline, lower_kernel, speedup_table, PudProgram, SpeedupRow, Step,
    StepKind, Variant,
};
