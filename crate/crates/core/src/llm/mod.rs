//! Provider-agnostic chat gateway: sessions, token accounting, cost, and
//! record/replay transcripts.

mod cost;
mod message;
mod session;
mod tokens;
pub mod transcript;
mod transport;

pub use cost::{compute_cost, Cost, Rates, TokenUsage};
pub use message::{ChatMessage, MessageId, Outgoing, Role, Tag};
pub use session::{ChatSession, Gateway, Reply, RetryPolicy};
pub use tokens::estimate_tokens;
pub use transcript::{RecordingTransport, ReplayTransport, TranscriptEntry};
pub use transport::{
    ChatTransport, Completion, OpenAiTransport, ScriptedTransport, TransportError,
};
