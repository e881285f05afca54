use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// One chat-completion call. `seed` is advisory; backends that cannot honour
/// it ignore it.
#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub system: &'a str,
    pub messages: &'a [Message],
    pub seed: u64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ChatError {
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("cannot decode backend response: {0}")]
    Decode(String),
    #[error("invalid message history: {0}")]
    Protocol(String),
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: Box<ChatError> },
    #[error("backend unavailable: {0}")]
    Unavailable(String),
}

impl ChatError {
    pub fn is_retryable(&self) -> bool {
        match self {
            ChatError::Http { status, .. } => matches!(status, 408 | 409 | 429 | 500 | 502 | 503 | 504),
            ChatError::Transport(_) => true,
            _ => false,
        }
    }
}

/// A chat-completion backend. Implementations must be safe to share across
/// worker threads.
pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ChatError>;

    /// Stable identifier recorded in run provenance.
    fn id(&self) -> String;
}

impl<C: ChatClient + ?Sized> ChatClient for std::sync::Arc<C> {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ChatError> {
        (**self).complete(request)
    }

    fn id(&self) -> String {
        (**self).id()
    }
}

impl<C: ChatClient + ?Sized> ChatClient for &C {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ChatError> {
        (**self).complete(request)
    }

    fn id(&self) -> String {
        (**self).id()
    }
}

/// Non-empty, strictly alternating user/assistant messages starting with user.
pub fn validate_history(messages: &[Message]) -> Result<(), ChatError> {
    if messages.is_empty() {
        return Err(ChatError::Protocol("empty history".into()));
    }
    for (i, m) in messages.iter().enumerate() {
        let expected = if i % 2 == 0 { Role::User } else { Role::Assistant };
        if m.role != expected {
            return Err(ChatError::Protocol(format!(
                "message {i} has role {:?}, expected {:?}",
                m.role, expected
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_rules() {
        assert!(validate_history(&[]).is_err());
        assert!(validate_history(&[Message::assistant("x")]).is_err());
        assert!(validate_history(&[Message::user("a"), Message::user("b")]).is_err());
        validate_history(&[Message::user("a"), Message::assistant("b"), Message::user("c")]).unwrap();
    }

    #[test]
    fn retryable_classification() {
        assert!(ChatError::Http { status: 429, body: String::new() }.is_retryable());
        assert!(ChatError::Http { status: 503, body: String::new() }.is_retryable());
        assert!(!ChatError::Http { status: 401, body: String::new() }.is_retryable());
        assert!(!ChatError::Decode("x".into()).is_retryable());
    }
}
