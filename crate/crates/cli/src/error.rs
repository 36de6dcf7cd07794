use std::fmt;
use std::process::ExitCode;

use luckskill::baseline::BaselineError;
use luckskill::btpoisson::BtError;
use luckskill::corpus::CorpusError;
use luckskill::features::FeatureError;
use luckskill::skillcoef::SkillError;
use luckskill::synth::SynthError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// Bad input or arguments; exit code 2.
    Validation,
    /// Valid input that could not be processed; exit code 3.
    Computation,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn invalid(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: Kind::Validation,
            error: error.into(),
        }
    }

    pub fn failed(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: Kind::Computation,
            error: error.into(),
        }
    }

    pub fn context(self, msg: impl fmt::Display) -> Self {
        Self {
            kind: self.kind,
            error: self.error.context(msg.to_string()),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self.kind {
            Kind::Validation => ExitCode::from(2),
            Kind::Computation => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait OrInvalid<T> {
    fn or_invalid(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> OrInvalid<T> for Result<T, E> {
    fn or_invalid(self) -> CliResult<T> {
        self.map_err(CliError::invalid)
    }
}

pub trait OrFailed<T> {
    fn or_failed(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> OrFailed<T> for Result<T, E> {
    fn or_failed(self) -> CliResult<T> {
        self.map_err(CliError::failed)
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        Self::invalid(e)
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        Self::invalid(e)
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        Self::invalid(e)
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::RedrawLimit(_) => Self::failed(e),
            _ => Self::invalid(e),
        }
    }
}

impl From<SkillError> for CliError {
    fn from(e: SkillError) -> Self {
        match e {
            SkillError::Baseline(_) | SkillError::TooFewReplicates(_) | SkillError::BadLevel(_) => {
                Self::invalid(e)
            }
            _ => Self::failed(e),
        }
    }
}

impl From<BtError> for CliError {
    fn from(e: BtError) -> Self {
        match e {
            BtError::InvalidSpec(_)
            | BtError::InvalidData(_)
            | BtError::MissingFeatures(_)
            | BtError::MissingFeatureValue { .. }
            | BtError::InsufficientIterations { .. } => Self::invalid(e),
            _ => Self::failed(e),
        }
    }
}
