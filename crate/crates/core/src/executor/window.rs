use serde::{Deserialize, Serialize};

use crate::llm::estimate_tokens;

/// Lines fed back after a build that reported an error.
pub const ERROR_WINDOW: usize = 50;
/// Lines fed back, with the Dockerfile, after a build that reported nothing.
pub const NON_ERROR_WINDOW: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuildStatus {
    Ok,
    Error,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogCapture {
    pub lines: Vec<String>,
    pub exit_status: BuildStatus,
    /// Seconds.
    pub duration: f64,
}

impl LogCapture {
    pub fn new(lines: Vec<String>, exit_status: BuildStatus, duration: f64) -> Self {
        Self {
            lines,
            exit_status,
            duration,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    Error,
    NonError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureExtract {
    pub kind: FailureKind,
    pub window: Vec<String>,
    /// Present exactly for non-error failures.
    pub dockerfile_text: Option<String>,
}

impl FailureExtract {
    pub fn estimated_tokens(&self) -> usize {
        estimate_tokens(&self.window.join("\n"))
            + self.dockerfile_text.as_deref().map_or(0, estimate_tokens)
    }
}

fn suffix(lines: &[String], n: usize) -> Vec<String> {
    lines[lines.len().saturating_sub(n)..].to_vec()
}

/// Picks the log suffix the LLM sees.
///
/// Builds that exited with an error (or timed out) yield the last 50 lines.
/// Builds that exited cleanly yield the last 200 lines plus the Dockerfile.
/// With a token budget, the oldest lines are dropped until the extract fits.
pub fn select_failure_window(
    logs: &LogCapture,
    dockerfile_text: &str,
    token_budget: Option<usize>,
) -> FailureExtract {
    let mut extract = match logs.exit_status {
        BuildStatus::Ok => FailureExtract {
            kind: FailureKind::NonError,
            window: suffix(&logs.lines, NON_ERROR_WINDOW),
            dockerfile_text: Some(dockerfile_text.to_string()),
        },
        BuildStatus::Error | BuildStatus::Timeout => FailureExtract {
            kind: FailureKind::Error,
            window: suffix(&logs.lines, ERROR_WINDOW),
            dockerfile_text: None,
        },
    };
    if let Some(budget) = token_budget {
        // Sliding window: keep the most recent lines.
        let mut tokens: Vec<usize> = extract
            .window
            .iter()
            .map(|l| estimate_tokens(l) + 1)
            .collect();
        let fixed = extract
            .dockerfile_text
            .as_deref()
            .map_or(0, estimate_tokens);
        let mut total: usize = fixed + tokens.iter().sum::<usize>();
        let mut drop = 0;
        while total > budget && drop < tokens.len() {
            total -= tokens[drop];
            drop += 1;
        }
        extract.window.drain(..drop);
        tokens.clear();
    }
    extract
}
