use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use serde_json::json;

use super::cost::TokenUsage;
use super::message::ChatMessage;
use crate::error::Error;

/// What a transport returns for one chat request.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    /// Provider-reported usage, when the provider reports it.
    pub usage: Option<TokenUsage>,
}

#[derive(Debug)]
pub enum TransportError {
    /// Network hiccup, rate limit, server error. Worth another try.
    Retryable(String),
    /// Retrying cannot help (replay mismatch, bad credentials, ...).
    Fatal(Error),
}

/// A chat-completion backend. Implementations must be safe to share across
/// concurrently running sessions.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, model: &str, messages: &[ChatMessage])
        -> Result<Completion, TransportError>;
}

/// Hands out canned responses in order. `Err` entries simulate transport
/// failures. Every request is kept for inspection.
#[derive(Debug, Default)]
pub struct ScriptedTransport {
    responses: Mutex<VecDeque<Result<String, String>>>,
    requests: Mutex<Vec<Vec<ChatMessage>>>,
}

impl ScriptedTransport {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            responses: Mutex::new(responses.into_iter().map(|s| Ok(s.into())).collect()),
            requests: Mutex::default(),
        }
    }

    pub fn with_script(script: Vec<Result<String, String>>) -> Self {
        Self {
            responses: Mutex::new(script.into()),
            requests: Mutex::default(),
        }
    }

    pub fn push(&self, response: impl Into<String>) {
        self.responses
            .lock()
            .unwrap()
            .push_back(Ok(response.into()));
    }

    pub fn remaining(&self) -> usize {
        self.responses.lock().unwrap().len()
    }

    pub fn requests(&self) -> Vec<Vec<ChatMessage>> {
        self.requests.lock().unwrap().clone()
    }
}

impl ChatTransport for ScriptedTransport {
    fn complete(
        &self,
        _model: &str,
        messages: &[ChatMessage],
    ) -> Result<Completion, TransportError> {
        self.requests.lock().unwrap().push(messages.to_vec());
        match self.responses.lock().unwrap().pop_front() {
            Some(Ok(text)) => Ok(Completion { text, usage: None }),
            Some(Err(e)) => Err(TransportError::Retryable(e)),
            None => Err(TransportError::Fatal(Error::LlmUnavailable(
                "scripted transport has no responses left".into(),
            ))),
        }
    }
}

/// OpenAI-compatible `/chat/completions` client.
pub struct OpenAiTransport {
    agent: ureq::Agent,
    api_base: String,
    api_key: String,
    temperature: f32,
}

impl OpenAiTransport {
    pub fn new(api_base: impl Into<String>, api_key: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(300)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            api_base: api_base.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            temperature: 0.0,
        }
    }
}

impl ChatTransport for OpenAiTransport {
    fn complete(
        &self,
        model: &str,
        messages: &[ChatMessage],
    ) -> Result<Completion, TransportError> {
        let body = json!({
            "model": model,
            "temperature": self.temperature,
            "messages": messages
                .iter()
                .map(|m| json!({"role": m.role.as_str(), "content": m.content}))
                .collect::<Vec<_>>(),
        });
        let url = format!("{}/chat/completions", self.api_base);
        let mut resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| TransportError::Retryable(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError::Retryable(e.to_string()))?;
        if status == 429 || status >= 500 {
            return Err(TransportError::Retryable(format!("HTTP {status}: {text}")));
        }
        if status >= 400 {
            return Err(TransportError::Fatal(Error::LlmUnavailable(format!(
                "HTTP {status}: {text}"
            ))));
        }
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| TransportError::Retryable(format!("bad JSON: {e}")))?;
        let content = value["choices"][0]["message"]["content"]
            .as_str()
            .unwrap_or_default()
            .to_string();
        let usage = value.get("usage").and_then(|u| {
            Some(TokenUsage::new(
                u.get("prompt_tokens")?.as_u64()?,
                u.get("completion_tokens")?.as_u64()?,
            ))
        });
        Ok(Completion {
            text: content,
            usage,
        })
    }
}
