use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Validation,
    Runtime,
}

/// A failure with the exit status it maps to.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Validation,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Runtime,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => 1,
            ErrorKind::Runtime => 2,
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> String {
        serde_json::json!({
            "status": "error",
            "kind": self.kind,
            "exit_code": self.exit_code(),
            "message": self.message,
        })
        .to_string()
    }
}

impl From<pudsim_harness::HarnessError> for CliError {
    fn from(e: pudsim_harness::HarnessError) -> Self {
        if e.is_validation() {
            Self::validation(e.to_string())
        } else {
            Self::runtime(e.to_string())
        }
    }
}

impl From<pudsim_casestudies::CaseError> for CliError {
    fn from(e: pudsim_casestudies::CaseError) -> Self {
        if e.is_validation() {
            Self::validation(e.to_string())
        } else {
            Self::runtime(e.to_string())
        }
    }
}

/// Model errors come from the requested commands, addresses or profile.
impl From<pudsim_core::Error> for CliError {
    fn from(e: pudsim_core::Error) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::runtime(e.to_string())
    }
}
