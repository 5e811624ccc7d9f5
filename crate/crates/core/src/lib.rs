//! Command-level model of simultaneous many-row activation in DDR4 banks.
//!
//! The crate is layered bottom-up:
//!
//! * [`decoder`] turns an ACT→PRE→ACT pair into the set of raised wordlines.
//! * [`analog`] resolves charge sharing among those rows into sensed bits.
//! * [`bank`] is the command state machine that ties the two together.
//! * [`ops`] builds MAJ-X, Frac, RowClone and Multi-RowCopy on top.
//!
//! ```
//! use pudsim_core::{Bank, CommandSequence, DeviceProfile};
//!
//! let profile = DeviceProfile::preset("demo-8").unwrap();
//! let mut bank = Bank::new(profile, 1).unwrap();
//! let trace = bank.execute_sequence(&CommandSequence::apa(0, 7, 3.0, 3.0, 36.0)).unwrap();
//! assert_eq!(trace.events[2].activated, vec![0, 1, 6, 7]);
//! ```

pub mod analog;
pub mod bank;
pub mod cells;
pub mod decoder;
pub mod error;
pub mod ops;
pub mod profile;
pub mod seed;
pub mod timing;

pub use analog::{AnalogParams, Environment, SenseOutcome};
pub use bank::{Bank, BankState, Command, CommandKind, CommandSequence, Phase, TraceEvent, TraceResult};
pub use cells::{init_subarray, DataPattern, FixedPattern, SubarrayState};
pub use decoder::{split_address, LatchState, PredecodeVector, RowDecoder};
pub use error::{Error, Result};
pub use ops::{plan_replication, ReplicationPlan, SuccessRateReport};
pub use profile::{DeviceProfile, Manufacturer};
pub use timing::{classify_timing, ActivationMode, SenseMode, TimingRegime};
