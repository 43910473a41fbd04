use std::path::PathBuf;

/// Errors surfaced by the agent pipeline.
///
/// Every variant maps to a stable, kebab-case code (see [`Error::code`]) that
/// ends up in reports and CLI diagnostics.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("llm-unavailable: {0}")]
    LlmUnavailable(String),

    #[error("replay-mismatch: transcript entry {seq} expected digest {expected}, got {actual}")]
    ReplayMismatch {
        seq: u64,
        expected: String,
        actual: String,
    },

    #[error("replay-exhausted: transcript has no entry for request {0}")]
    ReplayExhausted(u64),

    #[error("context-overflow: {needed} tokens needed, budget is {budget}")]
    ContextOverflow { needed: usize, budget: usize },

    #[error("scan-failed: {path}: {reason}")]
    ScanFailed { path: PathBuf, reason: String },

    #[error("no-build-system: no build system marker found")]
    NoBuildSystem,

    #[error("template-incomplete: template `{template}` is missing binding `{placeholder}`")]
    TemplateIncomplete {
        template: String,
        placeholder: String,
    },

    #[error("invalid-template: {0}")]
    InvalidTemplate(String),

    #[error("no-dockerfile-in-response")]
    NoDockerfileInResponse,

    #[error("generation-failed: {0}")]
    GenerationFailed(String),

    #[error("backend-unavailable: {0}")]
    BackendUnavailable(String),

    #[error("invalid-input: {0}")]
    InvalidInput(String),

    #[error("invalid-config: {0}")]
    Config(String),

    #[error("transcript: {0}")]
    Transcript(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::LlmUnavailable(_) => "llm-unavailable",
            Error::ReplayMismatch { .. } => "replay-mismatch",
            Error::ReplayExhausted(_) => "replay-exhausted",
            Error::ContextOverflow { .. } => "context-overflow",
            Error::ScanFailed { .. } => "scan-failed",
            Error::NoBuildSystem => "no-build-system",
            Error::TemplateIncomplete { .. } => "template-incomplete",
            Error::InvalidTemplate(_) => "invalid-template",
            Error::NoDockerfileInResponse => "no-dockerfile-in-response",
            Error::GenerationFailed(_) => "generation-failed",
            Error::BackendUnavailable(_) => "backend-unavailable",
            Error::InvalidInput(_) => "invalid-input",
            Error::Config(_) => "invalid-config",
            Error::Transcript(_) => "transcript",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
