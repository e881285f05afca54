//! Two-agent self-play. Agent A opens with the rendered opening message; each
//! utterance then becomes the next user message of the other agent, and the
//! full history is replayed on every call.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::client::{ChatClient, CompletionRequest, Message};
use crate::corpus::{Conversation, Corpus, Turn};
use crate::features::PersonaFeatures;
use crate::prompts::{PromptError, PromptRegistry, PromptVariantSet};
use crate::util::derive_seed;

pub const DEFAULT_TURNS: usize = 64;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("turn budget must be even and at least 2, got {0}")]
    InvalidTurns(usize),
    #[error("no persona pairs to simulate")]
    NoPairs,
    #[error("min_success_fraction must lie in [0, 1], got {0}")]
    InvalidFraction(f64),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("{failed} of {total} conversations were truncated, above the allowed failure share")]
    BelowThreshold { failed: usize, total: usize, partial: Box<DialogueSet> },
    #[error("dialogue file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, SimulateError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Agent {
    A,
    B,
}

impl Agent {
    pub fn at(position: usize) -> Self {
        if position.is_multiple_of(2) {
            Agent::A
        } else {
            Agent::B
        }
    }
}

/// Identifier of the simulated stand-in for a human speaker.
pub fn simulated_speaker_id(human_id: &str) -> String {
    format!("sim-{human_id}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaPair {
    /// Source human conversation id.
    pub pair_id: String,
    pub a: PersonaFeatures,
    pub b: PersonaFeatures,
}

/// One pair per conversation whose two participants both have personas,
/// in corpus order, with the first speaker as agent A. `limit` caps the count.
pub fn persona_pairs(corpus: &Corpus, personas: &[PersonaFeatures], limit: Option<usize>) -> Vec<PersonaPair> {
    let by_id = crate::features::personas_by_speaker(personas);
    corpus
        .conversations
        .iter()
        .filter(|c| c.participants.len() == 2)
        .filter_map(|c| {
            let a = by_id.get(c.participants[0].as_str())?;
            let b = by_id.get(c.participants[1].as_str())?;
            Some(PersonaPair {
                pair_id: c.conversation_id.clone(),
                a: (*a).clone(),
                b: (*b).clone(),
            })
        })
        .take(limit.unwrap_or(usize::MAX))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentTurn {
    pub agent: Agent,
    pub index: u32,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedConversation {
    pub conversation_id: String,
    pub pair_id: String,
    pub replicate: u32,
    pub persona_a: PersonaFeatures,
    pub persona_b: PersonaFeatures,
    pub variant_id: String,
    pub backend: String,
    pub seed: u64,
    pub target_turns: usize,
    #[serde(skip)]
    pub turns: Vec<AgentTurn>,
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl GeneratedConversation {
    fn speaker_of(&self, agent: Agent) -> String {
        match agent {
            Agent::A => simulated_speaker_id(&self.persona_a.speaker_id),
            Agent::B => simulated_speaker_id(&self.persona_b.speaker_id),
        }
    }

    /// Corpus view with simulated speaker ids.
    pub fn as_conversation(&self) -> Conversation {
        Conversation::new(
            &self.conversation_id,
            self.turns
                .iter()
                .map(|t| Turn {
                    speaker_id: self.speaker_of(t.agent),
                    index: t.index,
                    text: t.text.clone(),
                })
                .collect(),
        )
    }
}

pub struct ConversationSpec<'a> {
    pub conversation_id: &'a str,
    pub pair_id: &'a str,
    pub replicate: u32,
    pub turns: usize,
    pub seed: u64,
}

fn check_turns(turns: usize) -> Result<()> {
    if turns < 2 || !turns.is_multiple_of(2) {
        return Err(SimulateError::InvalidTurns(turns));
    }
    Ok(())
}

/// Runs one conversation. Backend failures truncate the conversation and are
/// recorded on it; only invalid arguments and prompt errors are returned.
pub fn run_conversation(
    persona_a: &PersonaFeatures,
    persona_b: &PersonaFeatures,
    variants: &PromptVariantSet,
    registry: &PromptRegistry,
    client: &dyn ChatClient,
    spec: &ConversationSpec<'_>,
) -> Result<GeneratedConversation> {
    check_turns(spec.turns)?;
    let system_a = registry.render_system(persona_a, variants)?;
    let system_b = registry.render_system(persona_b, variants)?;
    let opening = registry.render_opening(persona_a, variants)?;

    let mut history_a = vec![Message::user(opening)];
    let mut history_b: Vec<Message> = Vec::new();
    let mut turns = Vec::with_capacity(spec.turns);
    let mut failure = None;
    for position in 0..spec.turns {
        let agent = Agent::at(position);
        let (system, own) = match agent {
            Agent::A => (&system_a, &history_a),
            Agent::B => (&system_b, &history_b),
        };
        let reply = client.complete(&CompletionRequest {
            system,
            messages: own,
            seed: spec.seed,
        });
        let text = match reply {
            Ok(t) => t,
            Err(e) => {
                tracing::warn!(conversation = spec.conversation_id, turn = position, error = %e, "backend failure, truncating");
                failure = Some(format!("turn {position}: {e}"));
                break;
            }
        };
        let (own, other) = match agent {
            Agent::A => (&mut history_a, &mut history_b),
            Agent::B => (&mut history_b, &mut history_a),
        };
        own.push(Message::assistant(text.clone()));
        other.push(Message::user(text.clone()));
        turns.push(AgentTurn {
            agent,
            index: position as u32,
            text,
        });
    }

    Ok(GeneratedConversation {
        conversation_id: spec.conversation_id.to_string(),
        pair_id: spec.pair_id.to_string(),
        replicate: spec.replicate,
        persona_a: persona_a.clone(),
        persona_b: persona_b.clone(),
        variant_id: variants.key(),
        backend: client.id(),
        seed: spec.seed,
        target_turns: spec.turns,
        truncated: failure.is_some(),
        failure,
        turns,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchOptions {
    pub replicates: u32,
    pub turns: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
    pub min_success_fraction: f64,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            replicates: 1,
            turns: DEFAULT_TURNS,
            master_seed: 0,
            workers: 0,
            min_success_fraction: 0.9,
        }
    }
}

/// Seed for one conversation; independent of the prompt variants so every
/// variant is evaluated on the same random stream.
pub fn conversation_seed(master: u64, pair_id: &str, replicate: u32) -> u64 {
    derive_seed(&[
        b"conversation",
        &master.to_le_bytes(),
        pair_id.as_bytes(),
        &replicate.to_le_bytes(),
    ])
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueSet {
    pub variant_id: String,
    pub master_seed: u64,
    pub conversations: Vec<GeneratedConversation>,
    /// Human speaker id → simulated agent id.
    pub mapping: BTreeMap<String, String>,
}

impl DialogueSet {
    pub fn truncated_count(&self) -> usize {
        self.conversations.iter().filter(|c| c.truncated).count()
    }

    pub fn as_conversations(&self, include_truncated: bool) -> Vec<Conversation> {
        self.conversations
            .iter()
            .filter(|c| include_truncated || !c.truncated)
            .map(GeneratedConversation::as_conversation)
            .collect()
    }

    /// JSONL, one turn per line, in conversation order.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for c in &self.conversations {
            for t in &c.turns {
                let row = TurnRow {
                    conversation_id: c.conversation_id.clone(),
                    agent: t.agent,
                    speaker_id: c.speaker_of(t.agent),
                    index: t.index,
                    text: t.text.clone(),
                };
                serde_json::to_writer(&mut out, &row)?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            variant_id: self.variant_id.clone(),
            master_seed: self.master_seed,
            conversation_count: self.conversations.len(),
            truncated_count: self.truncated_count(),
            mapping: self.mapping.clone(),
            conversations: self.conversations.clone(),
        }
    }

    /// Writes `<stem>.jsonl` and `<stem>.manifest.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join(format!("{stem}.jsonl")))?);
        self.write_jsonl(&mut w)?;
        w.flush()?;
        let mut m = BufWriter::new(File::create(dir.join(format!("{stem}.manifest.json")))?);
        serde_json::to_writer_pretty(&mut m, &self.manifest())?;
        m.write_all(b"\n")?;
        m.flush()
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let manifest: Manifest = {
            let f = File::open(dir.join(format!("{stem}.manifest.json")))?;
            serde_json::from_reader(BufReader::new(f)).map_err(|e| SimulateError::Parse {
                line: e.line(),
                message: e.to_string(),
            })?
        };
        let f = File::open(dir.join(format!("{stem}.jsonl")))?;
        Self::from_parts(manifest, BufReader::new(f))
    }

    pub fn from_parts<R: BufRead>(manifest: Manifest, turns: R) -> Result<Self> {
        let mut conversations = manifest.conversations;
        let position: BTreeMap<String, usize> = conversations
            .iter()
            .enumerate()
            .map(|(i, c)| (c.conversation_id.clone(), i))
            .collect();
        for (i, line) in turns.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| SimulateError::Parse { line: i + 1, message };
            let row: TurnRow = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
            let slot = position
                .get(&row.conversation_id)
                .ok_or_else(|| parse_err(format!("conversation `{}` not in manifest", row.conversation_id)))?;
            conversations[*slot].turns.push(AgentTurn {
                agent: row.agent,
                index: row.index,
                text: row.text,
            });
        }
        Ok(Self {
            variant_id: manifest.variant_id,
            master_seed: manifest.master_seed,
            conversations,
            mapping: manifest.mapping,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TurnRow {
    conversation_id: String,
    agent: Agent,
    speaker_id: String,
    index: u32,
    text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub variant_id: String,
    pub master_seed: u64,
    pub conversation_count: usize,
    pub truncated_count: usize,
    pub mapping: BTreeMap<String, String>,
    pub conversations: Vec<GeneratedConversation>,
}

/// Runs `replicates` conversations per pair. Output order is pair-major,
/// replicate-minor regardless of `workers`.
pub fn run_batch(
    pairs: &[PersonaPair],
    variants: &PromptVariantSet,
    registry: &PromptRegistry,
    client: &dyn ChatClient,
    options: &BatchOptions,
) -> Result<DialogueSet> {
    if !(0.0..=1.0).contains(&options.min_success_fraction) {
        return Err(SimulateError::InvalidFraction(options.min_success_fraction));
    }
    let mut set = DialogueSet {
        variant_id: variants.key(),
        master_seed: options.master_seed,
        ..Default::default()
    };
    if options.replicates == 0 {
        return Ok(set);
    }
    if pairs.is_empty() {
        return Err(SimulateError::NoPairs);
    }
    check_turns(options.turns)?;
    registry.check(variants)?;

    let tasks: Vec<(&PersonaPair, u32)> = pairs
        .iter()
        .flat_map(|p| (0..options.replicates).map(move |r| (p, r)))
        .collect();
    let run_all = || -> Result<Vec<GeneratedConversation>> {
        tasks
            .par_iter()
            .map(|(pair, rep)| {
                let id = format!("{}-r{rep}", pair.pair_id);
                run_conversation(
                    &pair.a,
                    &pair.b,
                    variants,
                    registry,
                    client,
                    &ConversationSpec {
                        conversation_id: &id,
                        pair_id: &pair.pair_id,
                        replicate: *rep,
                        turns: options.turns,
                        seed: conversation_seed(options.master_seed, &pair.pair_id, *rep),
                    },
                )
            })
            .collect()
    };
    set.conversations = if options.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(io::Error::other)?
            .install(run_all)?
    } else {
        run_all()?
    };
    for p in pairs {
        for h in [&p.a.speaker_id, &p.b.speaker_id] {
            set.mapping.insert(h.clone(), simulated_speaker_id(h));
        }
    }

    let failed = set.truncated_count();
    let total = set.conversations.len();
    let succeeded = (total - failed) as f64 / total as f64;
    if succeeded + 1e-12 < options.min_success_fraction {
        return Err(SimulateError::BelowThreshold {
            failed,
            total,
            partial: Box::new(set),
        });
    }
    if failed > 0 {
        tracing::warn!(failed, total, "some conversations were truncated");
    }
    Ok(set)
}
