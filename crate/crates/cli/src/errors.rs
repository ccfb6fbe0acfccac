//! Error classification for exit codes: 1 data, 2 config, 3 provider.

use serde::Serialize;

use syllabus_skills::{
    AbilityError, AggregateError, AnalyticsError, CorpusError, EmbedError, FilterError,
    NormalizeError, ScoreError,
};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Provider(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 1,
            CliError::Config(_) => 2,
            CliError::Provider(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Data(_) => "data",
            CliError::Config(_) => "config",
            CliError::Provider(_) => "provider",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Provider(m) => m,
        }
    }

    /// Machine-readable error for stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Inner<'a> {
            code: i32,
            kind: &'a str,
            message: &'a str,
        }
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: Inner<'a>,
        }
        serde_json::to_string(&Wrapper {
            error: Inner {
                code: self.exit_code(),
                kind: self.kind(),
                message: self.message(),
            },
        })
        .expect("error serializes")
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::FileNotFound(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::BadConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Provider(e.to_string()),
        }
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::FileNotFound(_) => CliError::Config(e.to_string()),
            ScoreError::Provider { .. } => CliError::Provider(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<AggregateError> for CliError {
    fn from(e: AggregateError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<AbilityError> for CliError {
    fn from(e: AbilityError) -> Self {
        match e {
            AbilityError::FileNotFound(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<NormalizeError> for CliError {
    fn from(e: NormalizeError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<AnalyticsError> for CliError {
    fn from(e: AnalyticsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(format!("I/O error: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn data_err(message: impl ToString) -> CliError {
    CliError::Data(message.to_string())
}

pub fn config_err(message: impl ToString) -> CliError {
    CliError::Config(message.to_string())
}
