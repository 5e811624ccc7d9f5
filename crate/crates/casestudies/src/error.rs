use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CaseError {
    #[error("the available MAJ width set is empty")]
    EmptyWidthSet,

    #[error("MAJ width {0} is not one of 3, 5, 7, 9")]
    InvalidWidth(usize),

    #[error("operand width must be between 1 and {max}, got {got}")]
    InvalidOperandWidth { got: usize, max: usize },

    #[error("no cost entry for MAJ{x} at N={n}")]
    MissingCost { x: usize, n: usize },

    #[error("no usable activation count for MAJ{0}")]
    NoActivationCount(usize),

    #[error("usable fraction {value} for MAJ{x} at N={n} is outside [0, 1]")]
    BadFraction { x: usize, n: usize, value: f64 },

    #[error("Multi-RowCopy needs N in {{2, 4, 8, 16, 32}}, got {0}")]
    InvalidActivationCount(u32),

    #[error("unknown kernel {0:?}")]
    UnknownKernel(String),

    #[error("invalid latency table: {0}")]
    BadLatency(String),

    #[error(transparent)]
    Model(#[from] pudsim_core::Error),

    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },

    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
}

impl CaseError {
    /// Problems with the request, as opposed to I/O failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Self::Read { .. } | Self::Write { .. })
    }
}

pub type Result<T> = std::result::Result<T, CaseError>;
