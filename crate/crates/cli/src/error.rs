use std::fmt;

use crpred_core::Error;

/// Process exit classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Model,
    External,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Model => 4,
            ErrorClass::External => 5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ErrorClass::Config => "config_error",
            ErrorClass::Data => "data_error",
            ErrorClass::Model => "model_error",
            ErrorClass::External => "external_error",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub class: ErrorClass,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Config,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Data,
            message: message.into(),
        }
    }

    /// `error code=<n> kind=<class> msg="<text>"` on one line.
    pub fn line(&self) -> String {
        let msg: String = self
            .message
            .chars()
            .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
            .collect::<String>()
            .replace('"', "'");
        format!("error code={} kind={} msg=\"{}\"", self.class.exit_code(), self.class.label(), msg)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn classify(e: &Error) -> ErrorClass {
    use Error::*;
    match e {
        InvalidParameter(_) | NonPositiveEps(_) | UnknownCompressor(_) | GridTooLargeForExactMethod { .. } | NonPositiveOmega => {
            ErrorClass::Config
        }
        TooFewRows { .. }
        | SingularDesign
        | UntrainedModel
        | WrongModelKind { .. }
        | ModelFormat(_)
        | ZeroVariance
        | TargetOutOfRange { .. }
        | BudgetExhausted(_) => ErrorClass::Model,
        ExternalFailure(_) | Timeout(_) => ErrorClass::External,
        _ => ErrorClass::Data,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            class: classify(&e),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::data(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
