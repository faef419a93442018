use thiserror::Error;

use crate::model::TrafficClass;
use crate::schedulers::Policy;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid route: {0}")]
    InvalidRoute(String),

    #[error("invalid SNR table: {0}")]
    InvalidSnrTable(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("policy {policy} cannot serve {class} traffic")]
    PolicyClassMismatch { policy: Policy, class: TrafficClass },

    #[error("realized and nominal routes differ in segment structure")]
    RouteMismatch,

    #[error("need at least 2 samples for a confidence interval, got {0}")]
    InsufficientSamples(usize),

    #[error("relative gain against a zero or negative baseline")]
    DivisionByZero,

    #[error("config error in {source_name}: {message}")]
    Config { source_name: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(source_name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            source_name: source_name.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input (files, flags).
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::InvalidRoute(_)
                | Error::InvalidSnrTable(_)
                | Error::InvalidParameter { .. }
                | Error::PolicyClassMismatch { .. }
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
