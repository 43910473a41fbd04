use std::sync::{Arc, Mutex};
use std::time::Duration;

use tracing::{debug, warn};

use super::cost::TokenUsage;
use super::message::{ChatMessage, MessageId, Outgoing, Role, Tag};
use super::tokens::estimate_tokens;
use super::transport::{ChatTransport, TransportError};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn immediate() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::ZERO,
        }
    }
}

/// Shared handle to one model behind one transport. Cloning is cheap; all
/// clones feed the same usage total.
#[derive(Clone)]
pub struct Gateway {
    transport: Arc<dyn ChatTransport>,
    model: String,
    retry: RetryPolicy,
    total: Arc<Mutex<TokenUsage>>,
}

impl Gateway {
    pub fn new(transport: Arc<dyn ChatTransport>, model: impl Into<String>) -> Self {
        Self {
            transport,
            model: model.into(),
            retry: RetryPolicy::default(),
            total: Arc::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn session(&self, token_budget: usize) -> ChatSession {
        ChatSession {
            gateway: self.clone(),
            messages: Vec::new(),
            token_budget,
            usage: TokenUsage::default(),
            next_id: 0,
        }
    }

    /// Sum of usage over every session opened from this gateway.
    pub fn total_usage(&self) -> TokenUsage {
        *self.total.lock().unwrap()
    }
}

/// Result of one [`ChatSession::send`].
#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub text: String,
    pub usage: TokenUsage,
    pub request_id: MessageId,
    pub response_id: MessageId,
}

/// Ordered chat history under a token budget.
pub struct ChatSession {
    gateway: Gateway,
    messages: Vec<ChatMessage>,
    token_budget: usize,
    usage: TokenUsage,
    next_id: u64,
}

impl ChatSession {
    pub fn messages(&self) -> &[ChatMessage] {
        &self.messages
    }

    pub fn usage(&self) -> TokenUsage {
        self.usage
    }

    pub fn token_budget(&self) -> usize {
        self.token_budget
    }

    /// Changes the budget and prunes to it.
    pub fn set_token_budget(&mut self, token_budget: usize) -> Result<()> {
        self.token_budget = token_budget;
        self.prune()
    }

    pub fn estimated_tokens(&self) -> usize {
        total_tokens(&self.messages)
    }

    /// Adds a system prompt. System messages are never pruned.
    pub fn push_system(&mut self, content: impl Into<String>) -> Result<MessageId> {
        let content = content.into();
        let id = self.append(Role::System, Outgoing::new(content))?;
        if let Err(e) = self.prune() {
            self.messages.pop();
            return Err(e);
        }
        Ok(id)
    }

    fn append(&mut self, role: Role, msg: Outgoing) -> Result<MessageId> {
        if msg.content.trim().is_empty() {
            return Err(Error::InvalidInput("chat message content is empty".into()));
        }
        let id = MessageId(self.next_id);
        self.next_id += 1;
        self.messages.push(ChatMessage {
            id,
            role,
            content: msg.content,
            tags: msg.tags,
        });
        Ok(id)
    }

    /// Sends a user message and appends the assistant reply. The reply
    /// inherits the request's tags so the pair prunes as one exchange.
    pub fn send(&mut self, message: impl Into<Outgoing>) -> Result<Reply> {
        let message = message.into();
        let tags = message.tags.clone();
        let request_id = self.append(Role::User, message)?;
        if let Err(e) = self.prune() {
            self.messages.pop();
            return Err(e);
        }

        let completion = match self.complete_with_retry() {
            Ok(c) => c,
            Err(e) => {
                self.messages.pop();
                return Err(e);
            }
        };

        let usage = completion.usage.unwrap_or_else(|| {
            TokenUsage::new(
                self.estimated_tokens() as u64,
                estimate_tokens(&completion.text) as u64,
            )
        });
        self.usage += usage;
        *self.gateway.total.lock().unwrap() += usage;

        let response_id = self.append(
            Role::Assistant,
            Outgoing {
                content: completion.text.clone(),
                tags,
            },
        )?;
        self.prune()?;
        Ok(Reply {
            text: completion.text,
            usage,
            request_id,
            response_id,
        })
    }

    fn complete_with_retry(&self) -> Result<super::transport::Completion> {
        let retry = self.gateway.retry;
        let mut last = String::new();
        for attempt in 0..retry.attempts.max(1) {
            if attempt > 0 && !retry.base_delay.is_zero() {
                std::thread::sleep(retry.base_delay * 2u32.pow(attempt - 1));
            }
            match self
                .gateway
                .transport
                .complete(&self.gateway.model, &self.messages)
            {
                Ok(c) if c.text.trim().is_empty() => {
                    warn!(attempt, "empty LLM response");
                    last = "empty response".into();
                }
                Ok(c) => return Ok(c),
                Err(TransportError::Retryable(e)) => {
                    warn!(attempt, error = %e, "LLM transport failure");
                    last = e;
                }
                Err(TransportError::Fatal(e)) => return Err(e),
            }
        }
        Err(Error::LlmUnavailable(format!(
            "{} attempts failed, last error: {last}",
            retry.attempts.max(1)
        )))
    }

    pub fn add_tag(&mut self, id: MessageId, tag: Tag) {
        if let Some(m) = self.messages.iter_mut().find(|m| m.id == id) {
            m.tags.insert(tag);
        }
    }

    pub fn remove_tag(&mut self, id: MessageId, tag: &Tag) {
        if let Some(m) = self.messages.iter_mut().find(|m| m.id == id) {
            m.tags.remove(tag);
        }
    }

    pub fn contains(&self, id: MessageId) -> bool {
        self.messages.iter().any(|m| m.id == id)
    }

    /// Removes exchanges until the history fits the token budget.
    ///
    /// Oldest exchanges tagged `resolved` go first, then the oldest
    /// remaining removable exchange. System messages, pinned messages, the
    /// newest exchange and the newest unresolved error exchange stay.
    pub fn prune(&mut self) -> Result<()> {
        loop {
            let total = self.estimated_tokens();
            if total <= self.token_budget {
                return Ok(());
            }
            let units = exchanges(&self.messages);
            let protected_error = units.iter().rposition(|u| {
                let head = &self.messages[u.start];
                head.has(&Tag::ErrorExchange) && !head.has(&Tag::Resolved)
            });
            let last = units.len().saturating_sub(1);
            let removable = |i: usize, u: &std::ops::Range<usize>| {
                i != last
                    && Some(i) != protected_error
                    && self.messages[u.clone()]
                        .iter()
                        .all(|m| m.role != Role::System && !m.has(&Tag::Pinned))
            };
            let victim = units
                .iter()
                .enumerate()
                .find(|(i, u)| removable(*i, u) && self.messages[u.start].has(&Tag::Resolved))
                .or_else(|| units.iter().enumerate().find(|(i, u)| removable(*i, u)))
                .map(|(_, u)| u.clone());
            match victim {
                Some(range) => {
                    debug!(removed = range.len(), "pruned exchange");
                    self.messages.drain(range);
                }
                None => {
                    return Err(Error::ContextOverflow {
                        needed: total,
                        budget: self.token_budget,
                    })
                }
            }
        }
    }
}

fn total_tokens(messages: &[ChatMessage]) -> usize {
    messages.iter().map(|m| estimate_tokens(&m.content)).sum()
}

/// Groups the history into pruning units: each system message alone, each
/// user message together with the assistant messages that follow it.
fn exchanges(messages: &[ChatMessage]) -> Vec<std::ops::Range<usize>> {
    let mut units = Vec::new();
    let mut i = 0;
    while i < messages.len() {
        let start = i;
        i += 1;
        if messages[start].role == Role::User {
            while i < messages.len() && messages[i].role == Role::Assistant {
                i += 1;
            }
        }
        units.push(start..i);
    }
    units
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::transport::ScriptedTransport;

    fn gateway(responses: &[&str]) -> Gateway {
        Gateway::new(
            Arc::new(ScriptedTransport::new(responses.iter().copied())),
            "test",
        )
        .with_retry(RetryPolicy::immediate())
    }

    #[test]
    fn send_appends_pair_and_accumulates_usage() {
        let gw = gateway(&["CMake"]);
        let mut s = gw.session(10_000);
        let reply = s.send("which build system?").unwrap();
        assert_eq!(reply.text, "CMake");
        assert_eq!(s.messages().len(), 2);
        assert_eq!(s.messages()[1].role, Role::Assistant);
        assert_eq!(s.usage(), gw.total_usage());
        assert!(s.usage().output_tokens > 0);
    }

    #[test]
    fn three_transport_failures_surface_llm_unavailable() {
        let t = ScriptedTransport::with_script(vec![
            Err("timeout".into()),
            Err("timeout".into()),
            Err("timeout".into()),
            Ok("late".into()),
        ]);
        let gw = Gateway::new(Arc::new(t), "m").with_retry(RetryPolicy::immediate());
        let mut s = gw.session(1000);
        let err = s.send("hi").unwrap_err();
        assert_eq!(err.code(), "llm-unavailable");
        assert!(s.messages().is_empty());
    }

    #[test]
    fn empty_response_is_retried() {
        let gw = gateway(&["", "  ", "ok"]);
        let mut s = gw.session(1000);
        assert_eq!(s.send("hi").unwrap().text, "ok");
    }

    #[test]
    fn empty_message_rejected() {
        let gw = gateway(&["x"]);
        let mut s = gw.session(1000);
        assert!(matches!(s.send("   "), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn under_budget_prune_is_noop() {
        let gw = gateway(&["a".repeat(40).as_str()]);
        let mut s = gw.session(1000);
        s.push_system("sys").unwrap();
        s.send("q".repeat(40)).unwrap();
        let before = s.messages().to_vec();
        s.prune().unwrap();
        assert_eq!(before, s.messages());
    }
}
