//! Characterization harness for the pudsim device model.
//!
//! Samples row groups, sweeps timing / data-pattern / temperature / Vpp
//! grids over the activation test, MAJ-X and Multi-RowCopy, and exports the
//! per-group success distributions.

pub mod config;
pub mod discover;
pub mod error;
pub mod export;
pub mod run;
pub mod sampling;
pub mod stats;

pub use config::{ExperimentConfig, OperationKind};
pub use discover::{discover_subarrays, RowRange};
pub use error::{HarnessError, Result};
pub use export::{export, Format};
pub use run::{run_activation_test, run_experiment, run_maj_sweep, run_mrc_sweep, GroupSample, ParamKey, ParamReport};
pub use sampling::{sample_groups, RowGroup};
pub use stats::Summary;
