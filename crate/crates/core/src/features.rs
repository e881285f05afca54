//! Per-speaker persona features: demographics copied from the survey, the
//! affect score verbalised, and one topic phrase per conversation summarised
//! by the chat backend.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{select_turn_window, Corpus, CorpusError, Sex, Turn};
use crate::simulate::{ChatClient, ChatError, CompletionRequest, Message};
use crate::util::derive_seed;

/// Request prefix for topic summaries.
pub const TOPIC_INSTRUCTION: &str = "Please summarize the topic of the following sentences in 4 words or less:";

pub const TOPIC_MAX_WORDS: usize = 4;

/// Default 1-based window fed to the summariser, skipping opening small talk.
pub const TOPIC_WINDOW: (usize, usize) = (51, 70);

/// Verbal form of overall affect scores 1..=9.
pub const AFFECT_PHRASES: [&str; 9] = [
    "extremely negative",
    "very negative",
    "moderately negative",
    "slightly negative",
    "neutral",
    "slightly positive",
    "moderately positive",
    "very positive",
    "extremely positive",
];

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("affect score {0} outside 1..=9")]
    AffectOutOfRange(i64),
    #[error("speaker `{0}` has incomplete survey data")]
    IncompleteSpeaker(String),
    #[error("empty turn window for conversation `{0}`")]
    EmptyWindow(String),
    #[error("topic summary for conversation `{conversation_id}` failed: {source}")]
    Summary {
        conversation_id: String,
        #[source]
        source: ChatError,
    },
    #[error("topic summary for conversation `{0}` was empty")]
    EmptySummary(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("persona cache line {line}: {message}")]
    Cache { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, FeatureError>;

pub fn affect_to_phrase(score: i64) -> Result<&'static str> {
    if (1..=9).contains(&score) {
        Ok(AFFECT_PHRASES[(score - 1) as usize])
    } else {
        Err(FeatureError::AffectOutOfRange(score))
    }
}

pub fn affect_from_phrase(phrase: &str) -> Option<u8> {
    AFFECT_PHRASES
        .iter()
        .position(|p| *p == phrase)
        .map(|i| i as u8 + 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaFeatures {
    pub speaker_id: String,
    pub age: i64,
    pub gender: Sex,
    pub affect_phrase: String,
    pub topic_phrase: String,
    pub source_conversation_id: String,
}

/// Trims and keeps at most the first four whitespace-delimited words.
pub fn clean_summary(raw: &str) -> String {
    raw.split_whitespace()
        .take(TOPIC_MAX_WORDS)
        .collect::<Vec<_>>()
        .join(" ")
}

/// One utterance per line, no speaker labels.
pub fn topic_request(window: &[Turn]) -> String {
    let mut prompt = String::from(TOPIC_INSTRUCTION);
    for t in window {
        prompt.push('\n');
        prompt.push_str(&t.text);
    }
    prompt
}

pub fn summarize_topic(window: &[Turn], client: &dyn ChatClient, conversation_id: &str) -> Result<String> {
    if window.is_empty() {
        return Err(FeatureError::EmptyWindow(conversation_id.to_string()));
    }
    let messages = [Message::user(topic_request(window))];
    let raw = client
        .complete(&CompletionRequest {
            system: "",
            messages: &messages,
            seed: derive_seed(&[b"topic", conversation_id.as_bytes()]),
        })
        .map_err(|source| FeatureError::Summary {
            conversation_id: conversation_id.to_string(),
            source,
        })?;
    let phrase = clean_summary(&raw);
    if phrase.is_empty() {
        return Err(FeatureError::EmptySummary(conversation_id.to_string()));
    }
    Ok(phrase)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractOptions {
    pub window: (usize, usize),
    /// Maximum concurrent summaries; 0 uses the global pool.
    pub parallelism: usize,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            window: TOPIC_WINDOW,
            parallelism: 4,
        }
    }
}

/// One persona per participant of each conversation (first appearance wins
/// for speakers seen twice). Both participants share the conversation's
/// topic phrase. Expects a corpus already passed through `filter_complete`.
pub fn extract_personas(
    corpus: &Corpus,
    client: &dyn ChatClient,
    options: ExtractOptions,
) -> Result<Vec<PersonaFeatures>> {
    let summarize_all = || -> Result<Vec<String>> {
        corpus
            .conversations
            .par_iter()
            .map(|conv| {
                let w = select_turn_window(conv, options.window.0, options.window.1)?;
                if w.fallback {
                    tracing::debug!(conversation = %conv.conversation_id, "short conversation, using trailing window");
                }
                summarize_topic(&w.turns, client, &conv.conversation_id)
            })
            .collect()
    };
    let topics = if options.parallelism > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(options.parallelism)
            .build()
            .map_err(|e| FeatureError::Io(io::Error::other(e)))?
            .install(summarize_all)?
    } else {
        summarize_all()?
    };

    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (conv, topic) in corpus.conversations.iter().zip(topics) {
        for pid in &conv.participants {
            if !seen.insert(pid.clone()) {
                continue;
            }
            let rec = corpus
                .speaker(pid)
                .filter(|r| r.is_complete())
                .ok_or_else(|| FeatureError::IncompleteSpeaker(pid.clone()))?;
            let (Some(age), Some(gender), Some(affect)) = (rec.age, rec.sex, rec.overall_affect) else {
                return Err(FeatureError::IncompleteSpeaker(pid.clone()));
            };
            out.push(PersonaFeatures {
                speaker_id: pid.clone(),
                age,
                gender,
                affect_phrase: affect_to_phrase(affect)?.to_string(),
                topic_phrase: topic.clone(),
                source_conversation_id: conv.conversation_id.clone(),
            });
        }
    }
    Ok(out)
}

pub fn write_persona_cache<W: Write>(personas: &[PersonaFeatures], mut out: W) -> io::Result<()> {
    for p in personas {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_persona_cache<R: BufRead>(reader: R) -> Result<Vec<PersonaFeatures>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| FeatureError::Cache {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn personas_by_speaker(personas: &[PersonaFeatures]) -> HashMap<&str, &PersonaFeatures> {
    personas.iter().map(|p| (p.speaker_id.as_str(), p)).collect()
}
