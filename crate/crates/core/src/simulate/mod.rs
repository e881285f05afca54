//! Dialogue generation: chat backends, the two-agent protocol and batch runs.

pub mod client;
pub mod conversation;
pub mod http;
pub mod mock;
pub mod retry;
pub mod scorer;

pub use client::{validate_history, ChatClient, ChatError, CompletionRequest, Message, Role};
pub use conversation::{
    conversation_seed, persona_pairs, run_batch, run_conversation, simulated_speaker_id, Agent, AgentTurn,
    BatchOptions, ConversationSpec, DialogueSet, GeneratedConversation, Manifest, PersonaPair, SimulateError,
    DEFAULT_TURNS,
};
pub use http::{HttpBackendConfig, HttpChatClient};
pub use mock::{
    parse_cues, EchoClient, Envelope, EnvelopePatch, FailingClient, FixedClient, MockClient, PersonaCues,
    RecordedCall, StyleProfile, StyleRule, Vocabulary,
};
pub use retry::{RateLimiter, RetryPolicy, Retrying};
pub use scorer::{ConstantScorer, ExternalScorer, ScorerError, TextScorer};
