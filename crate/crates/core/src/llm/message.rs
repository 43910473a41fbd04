use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

/// Bookkeeping labels used by the pruning policy.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    /// A repair exchange carrying a build failure.
    ErrorExchange,
    /// The failure this exchange addressed no longer reproduces.
    Resolved,
    /// Never pruned.
    Pinned,
}

/// Session-unique, stable message identifier. Survives pruning of other
/// messages, unlike a vector index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageId(pub u64);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub id: MessageId,
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub tags: BTreeSet<Tag>,
}

impl ChatMessage {
    pub fn has(&self, tag: &Tag) -> bool {
        self.tags.contains(tag)
    }
}

/// A message about to be sent; the session assigns the id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outgoing {
    pub content: String,
    pub tags: BTreeSet<Tag>,
}

impl Outgoing {
    pub fn new(content: impl Into<String>) -> Self {
        Self {
            content: content.into(),
            tags: BTreeSet::new(),
        }
    }

    pub fn tagged(mut self, tag: Tag) -> Self {
        self.tags.insert(tag);
        self
    }
}

impl From<&str> for Outgoing {
    fn from(s: &str) -> Self {
        Outgoing::new(s)
    }
}

impl From<String> for Outgoing {
    fn from(s: String) -> Self {
        Outgoing::new(s)
    }
}
