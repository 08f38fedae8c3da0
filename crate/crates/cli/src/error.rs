use projlab_core::Error;
use serde_json::json;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Malformed configuration or measure; exit code 2.
    Validation(String),
    /// The top gap could not be certified; exit code 3.
    GapUncertified(String),
    Runtime(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::GapUncertified(_) => 3,
            CliError::Runtime(_) | CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::GapUncertified(_) => "gap_uncertified",
            CliError::Runtime(_) => "runtime",
            CliError::Io(_) => "io",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::GapUncertified(m) | CliError::Runtime(m) | CliError::Io(m) => m,
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.kind(), "message": self.message(), "exit_code": self.exit_code() }).to_string()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::GapUncertified => CliError::GapUncertified(m),
            Error::InvalidMeasure(_)
            | Error::Parse(_)
            | Error::InvalidArgument(_)
            | Error::Dimension { .. }
            | Error::Unsupported(_)
            | Error::ChartDimension
            | Error::InExceptionalSubspace
            | Error::ZeroVector => CliError::Validation(m),
            _ => CliError::Runtime(m),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}
