use thiserror::Error;

/// Errors raised by the device model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("unknown profile preset `{0}`")]
    UnknownPreset(String),

    #[error("failed to parse profile: {0}")]
    ProfileParse(String),

    #[error("row {row} out of range (bank holds {limit} addressable rows)")]
    RowOutOfRange { row: u32, limit: u32 },

    #[error("local row {row} out of range for a {limit}-row subarray")]
    LocalRowOutOfRange { row: u32, limit: u32 },

    #[error("predecode vectors disagree: {0}")]
    LatchMismatch(String),

    #[error("no row pair activates {0} rows in this profile")]
    UnreachableCount(u32),

    #[error("unknown data pattern `{0}`")]
    UnknownPattern(String),

    #[error("pattern matrix is {got_rows}x{got_cols}, expected {rows}x{cols}")]
    MatrixShape {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },

    #[error("illegal command {command} in phase {phase}")]
    IllegalCommand { command: &'static str, phase: &'static str },

    #[error("delay {0} ns is not a positive multiple of the command granularity")]
    BadDelay(f64),

    #[error("write data has {got} columns, bank has {expected}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("cross-subarray activation rejected: rows {first} and {second}")]
    CrossSubarray { first: u32, second: u32 },

    #[error("{knob} = {value} lies outside the characterized range [{min}, {max}]")]
    EnvironmentOutOfRange {
        knob: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("charge sharing needs at least one cell")]
    EmptyCellList,

    #[error("invalid replication: {0}")]
    InvalidReplication(String),

    #[error("operation needs {expected}, timings (t1={t1}, t2={t2}) give {got}")]
    RegimeMismatch {
        expected: &'static str,
        got: String,
        t1: f64,
        t2: f64,
    },

    #[error("operand count {got} does not match MAJ{expected}")]
    OperandCount { expected: usize, got: usize },

    #[error("row {0} is not in the activation set of the pair")]
    SourceNotInActivation(u32),

    #[error("row {0} must be the first-activated row of the pair")]
    SourceNotFirst(u32),

    #[error("rows {0} and {1} lie in different subarrays")]
    SubarrayMismatch(u32, u32),

    #[error("outcome matrix is ragged or empty")]
    RaggedOutcomes,
}

pub type Result<T> = std::result::Result<T, Error>;
