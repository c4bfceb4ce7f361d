use std::fmt;

use xmodal_core::adapter::AdapterError;
use xmodal_core::analysis::AnalysisError;
use xmodal_core::corpus::CorpusError;
use xmodal_core::inference::InferenceError;
use xmodal_core::texteval::TextEvalError;
use xmodal_core::training::TrainError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Config,
    Data,
    Numeric,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Config => 2,
            Kind::Data => 3,
            Kind::Numeric => 4,
        }
    }
}

/// A failure with the module it came from and the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

pub type Result<T> = std::result::Result<T, Failure>;

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Config,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Data,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Numeric,
            message: message.into(),
        }
    }

    /// Prepends `context` to the message.
    pub fn context(mut self, context: impl fmt::Display) -> Self {
        self.message = format!("{context}: {}", self.message);
        self
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub trait Context<T> {
    fn context(self, context: impl fmt::Display) -> Result<T>;
}

impl<T, E: Into<Failure>> Context<T> for std::result::Result<T, E> {
    fn context(self, context: impl fmt::Display) -> Result<T> {
        self.map_err(|e| e.into().context(context))
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::data(format!("json: {e}"))
    }
}

impl From<AdapterError> for Failure {
    fn from(e: AdapterError) -> Self {
        let kind = match e {
            AdapterError::Config(_) => Kind::Config,
            AdapterError::NonFinite(_) => Kind::Numeric,
            _ => Kind::Data,
        };
        Failure {
            kind,
            message: format!("adapter: {e}"),
        }
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        let kind = match &e {
            TrainError::Config(_) | TrainError::StageOrder { .. } => Kind::Config,
            TrainError::Diverged { .. } | TrainError::Numerics(_) => Kind::Numeric,
            TrainError::Adapter(a) => Failure::from(a.clone()).kind,
            _ => Kind::Data,
        };
        Failure {
            kind,
            message: format!("training: {e}"),
        }
    }
}

impl From<InferenceError> for Failure {
    fn from(e: InferenceError) -> Self {
        let kind = match &e {
            InferenceError::Adapter(a) => Failure::from(a.clone()).kind,
            _ => Kind::Data,
        };
        Failure {
            kind,
            message: format!("inference: {e}"),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        let kind = match e {
            AnalysisError::NonFinite | AnalysisError::Degenerate => Kind::Numeric,
            _ => Kind::Data,
        };
        Failure {
            kind,
            message: format!("analysis: {e}"),
        }
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        let kind = match e {
            CorpusError::Config(_) | CorpusError::BadRatios(_) => Kind::Config,
            _ => Kind::Data,
        };
        Failure {
            kind,
            message: format!("corpus: {e}"),
        }
    }
}

impl From<TextEvalError> for Failure {
    fn from(e: TextEvalError) -> Self {
        let kind = match e {
            TextEvalError::BadConfig(_) => Kind::Config,
            _ => Kind::Data,
        };
        Failure {
            kind,
            message: format!("texteval: {e}"),
        }
    }
}
