//! Offline chat backends.
//!
//! [`MockClient`] is a deterministic template generator. It reads the persona
//! markers that the prompt renderer writes into the system prompt and opening
//! message and emits utterances whose measurable features (length, informal
//! density, age/gender/affect lexicon words, topic words) follow a
//! configurable [`StyleProfile`]. Every call validates the message history and
//! counts violations.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::client::{validate_history, ChatClient, ChatError, CompletionRequest, Message};
use crate::corpus::Sex;
use crate::features::{affect_from_phrase, TOPIC_INSTRUCTION};
use crate::lexica::tokenize;
use crate::util::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Envelope {
    pub min_words: usize,
    pub max_words: usize,
    /// Per-word probability of an informal word.
    pub informal_rate: f64,
    /// Per-word probability of a word from the prompted topic.
    pub topic_rate: f64,
    /// Per-word probability of a persona-revealing word (age, gender or affect).
    pub persona_rate: f64,
    /// Per-word probability of an extra affect word on top of the persona
    /// share, with the persona's valence.
    pub affect_rate: f64,
    /// Per-word probability of repeating a word from the partner's last turn.
    pub echo_rate: f64,
}

impl Default for Envelope {
    fn default() -> Self {
        Self {
            min_words: 30,
            max_words: 60,
            informal_rate: 0.05,
            topic_rate: 0.0,
            persona_rate: 0.15,
            affect_rate: 0.0,
            echo_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvelopePatch {
    pub min_words: Option<usize>,
    pub max_words: Option<usize>,
    pub informal_rate: Option<f64>,
    pub topic_rate: Option<f64>,
    pub persona_rate: Option<f64>,
    pub affect_rate: Option<f64>,
    pub echo_rate: Option<f64>,
}

impl EnvelopePatch {
    fn apply(&self, e: &mut Envelope) {
        if let Some(v) = self.min_words {
            e.min_words = v;
        }
        if let Some(v) = self.max_words {
            e.max_words = v;
        }
        if let Some(v) = self.informal_rate {
            e.informal_rate = v;
        }
        if let Some(v) = self.topic_rate {
            e.topic_rate = v;
        }
        if let Some(v) = self.persona_rate {
            e.persona_rate = v;
        }
        if let Some(v) = self.affect_rate {
            e.affect_rate = v;
        }
        if let Some(v) = self.echo_rate {
            e.echo_rate = v;
        }
    }
}

/// Applied when `marker` occurs in the system prompt or the first message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleRule {
    pub marker: String,
    #[serde(flatten)]
    pub patch: EnvelopePatch,
}

impl StyleRule {
    pub fn new(marker: impl Into<String>, patch: EnvelopePatch) -> Self {
        Self {
            marker: marker.into(),
            patch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StyleProfile {
    pub base: Envelope,
    pub rules: Vec<StyleRule>,
    /// Persona assumed when the prompt carries no demographics.
    pub default_age: u32,
    /// `None` flips a coin per conversation.
    pub default_gender: Option<Sex>,
    pub default_affect: u8,
}

impl Default for StyleProfile {
    fn default() -> Self {
        Self::llm_like()
    }
}

impl StyleProfile {
    /// Verbose, fairly formal, over-emotional and persona-agnostic unless
    /// told otherwise; reacts to the shipped prompt fragments.
    pub fn llm_like() -> Self {
        Self {
            base: Envelope {
                affect_rate: 0.05,
                ..Envelope::default()
            },
            rules: vec![
                StyleRule::new(
                    "feelings.",
                    EnvelopePatch {
                        affect_rate: Some(0.0),
                        ..Default::default()
                    },
                ),
                StyleRule::new(
                    "informal language",
                    EnvelopePatch {
                        informal_rate: Some(0.3),
                        ..Default::default()
                    },
                ),
                StyleRule::new(
                    "normal person",
                    EnvelopePatch {
                        informal_rate: Some(0.12),
                        ..Default::default()
                    },
                ),
                StyleRule::new(
                    "one or two sentences",
                    EnvelopePatch {
                        min_words: Some(4),
                        max_words: Some(14),
                        ..Default::default()
                    },
                ),
                StyleRule::new(
                    "following topics:",
                    EnvelopePatch {
                        topic_rate: Some(0.2),
                        ..Default::default()
                    },
                ),
            ],
            default_age: 45,
            default_gender: None,
            default_affect: 7,
        }
    }

    /// Short, casual turns; used to synthesise human-like reference data.
    pub fn human_like() -> Self {
        Self {
            base: Envelope {
                min_words: 3,
                max_words: 15,
                informal_rate: 0.3,
                topic_rate: 0.2,
                persona_rate: 0.15,
                affect_rate: 0.0,
                echo_rate: 0.05,
            },
            rules: Vec::new(),
            default_age: 30,
            default_gender: None,
            default_affect: 5,
        }
    }

    pub fn with_max_words(mut self, max: usize) -> Self {
        self.base.max_words = max;
        self.base.min_words = self.base.min_words.min(max);
        self.rules.retain(|r| r.patch.max_words.is_none() && r.patch.min_words.is_none());
        self
    }

    pub fn envelope_for(&self, context: &str) -> Envelope {
        let mut e = self.base;
        for rule in &self.rules {
            if context.contains(&rule.marker) {
                rule.patch.apply(&mut e);
            }
        }
        e.max_words = e.max_words.max(e.min_words).max(1);
        e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Vocabulary {
    pub filler: Vec<String>,
    pub informal: Vec<String>,
    pub young: Vec<String>,
    pub old: Vec<String>,
    pub female: Vec<String>,
    pub male: Vec<String>,
    pub positive: Vec<String>,
    pub negative: Vec<String>,
}

fn words(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self {
            filler: words(&[
                "the", "we", "it", "was", "that", "then", "there", "about", "when", "with", "thing", "just",
                "would", "could", "really", "think", "because", "also", "very", "time",
            ]),
            informal: words(&["yeah", "lol", "gonna", "kinda", "haha", "wanna", "dude", "ok", "um", "nah"]),
            young: words(&["college", "class", "roommate", "campus", "exam", "dorm"]),
            old: words(&["mortgage", "kids", "career", "retirement", "grandkids", "marriage"]),
            female: words(&["love", "cute", "excited", "sister", "hair", "mom"]),
            male: words(&["game", "bro", "league", "beer", "truck", "buddy"]),
            positive: words(&["happy", "great", "fun", "glad", "enjoy", "awesome"]),
            negative: words(&["sad", "tired", "stress", "worried", "upset", "awful"]),
        }
    }
}

impl Vocabulary {
    fn is_style_word(&self, w: &str) -> bool {
        [
            &self.filler,
            &self.informal,
            &self.young,
            &self.old,
            &self.female,
            &self.male,
            &self.positive,
            &self.negative,
        ]
        .iter()
        .any(|list| list.iter().any(|x| x == w))
    }
}

/// Persona cues parsed from rendered prompts.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonaCues {
    pub age: Option<u32>,
    pub gender: Option<Sex>,
    pub affect: Option<u8>,
    pub topic: Vec<String>,
}

fn between<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let s = text.find(start)? + start.len();
    let rest = &text[s..];
    let e = rest.find(end)?;
    Some(&rest[..e])
}

pub fn parse_cues(system: &str, first_message: &str) -> PersonaCues {
    let mut cues = PersonaCues {
        age: None,
        gender: None,
        affect: None,
        topic: Vec::new(),
    };
    if let Some(g) = between(system, "you are a ", " and ") {
        cues.gender = match g.trim() {
            "female" => Some(Sex::Female),
            "male" => Some(Sex::Male),
            _ => None,
        };
    }
    if let Some(a) = between(system, " and ", " years old") {
        cues.age = a.trim().parse().ok();
    }
    if let Some(a) = between(system, "You feel ", " feelings") {
        cues.affect = affect_from_phrase(a.trim());
    }
    for text in [first_message, system] {
        if let Some(t) = between(text, "following topics: ", ".") {
            cues.topic = tokenize(t);
            break;
        }
        if let Some(i) = text.find("following topics: ") {
            cues.topic = tokenize(&text[i + "following topics: ".len()..]);
            break;
        }
    }
    cues
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordedCall {
    pub system: String,
    pub messages: Vec<Message>,
    pub seed: u64,
}

pub struct MockClient {
    seed: u64,
    profile: StyleProfile,
    vocab: Vocabulary,
    calls: AtomicUsize,
    violations: AtomicUsize,
    recorder: Option<Mutex<Vec<RecordedCall>>>,
}

impl MockClient {
    pub fn new(seed: u64, profile: StyleProfile) -> Self {
        Self {
            seed,
            profile,
            vocab: Vocabulary::default(),
            calls: AtomicUsize::new(0),
            violations: AtomicUsize::new(0),
            recorder: None,
        }
    }

    pub fn with_vocabulary(mut self, vocab: Vocabulary) -> Self {
        self.vocab = vocab;
        self
    }

    /// Keeps a copy of every request for inspection.
    pub fn recording(mut self) -> Self {
        self.recorder = Some(Mutex::new(Vec::new()));
        self
    }

    pub fn profile(&self) -> &StyleProfile {
        &self.profile
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// History-protocol violations seen so far.
    pub fn violations(&self) -> usize {
        self.violations.load(Ordering::SeqCst)
    }

    pub fn recorded(&self) -> Vec<RecordedCall> {
        self.recorder
            .as_ref()
            .map(|r| r.lock().unwrap_or_else(|p| p.into_inner()).clone())
            .unwrap_or_default()
    }

    fn rng_for(&self, req: &CompletionRequest<'_>) -> ChaCha8Rng {
        let last = req.messages.last().map(|m| m.content.as_str()).unwrap_or("");
        ChaCha8Rng::seed_from_u64(derive_seed(&[
            &self.seed.to_le_bytes(),
            &req.seed.to_le_bytes(),
            &(req.messages.len() as u64).to_le_bytes(),
            req.system.as_bytes(),
            last.as_bytes(),
        ]))
    }

    fn summarize(&self, text: &str) -> String {
        let mut counts: Vec<(String, usize)> = Vec::new();
        for t in tokenize(text.lines().skip(1).collect::<Vec<_>>().join(" ").as_str()) {
            if t.len() < 3 || self.vocab.is_style_word(&t) {
                continue;
            }
            match counts.iter_mut().find(|(w, _)| *w == t) {
                Some(slot) => slot.1 += 1,
                None => counts.push((t, 1)),
            }
        }
        // stable sort keeps first-occurrence order among ties
        counts.sort_by(|a, b| b.1.cmp(&a.1));
        let top: Vec<String> = counts.into_iter().take(3).map(|(w, _)| w).collect();
        if top.is_empty() {
            "small talk".into()
        } else {
            top.join(" ")
        }
    }

    fn pick<'a>(rng: &mut ChaCha8Rng, list: &'a [String]) -> Option<&'a str> {
        list.choose(rng).map(String::as_str)
    }

    fn utterance(&self, req: &CompletionRequest<'_>) -> String {
        let mut rng = self.rng_for(req);
        let first = req.messages.first().map(|m| m.content.as_str()).unwrap_or("");
        let context = format!("{}\n{}", req.system, first);
        let env = self.profile.envelope_for(&context);
        let cues = parse_cues(req.system, first);

        // persona falls back to profile defaults; the default gender is
        // drawn once per conversation seed
        let age = cues.age.unwrap_or(self.profile.default_age);
        let gender = cues.gender.or(self.profile.default_gender).unwrap_or_else(|| {
            let mut g = ChaCha8Rng::seed_from_u64(derive_seed(&[&self.seed.to_le_bytes(), &req.seed.to_le_bytes(), req.system.as_bytes()]));
            if g.gen_bool(0.5) {
                Sex::Female
            } else {
                Sex::Male
            }
        });
        let affect = cues.affect.unwrap_or(self.profile.default_affect);
        let p_old = ((f64::from(age) - 18.0) / 48.0).clamp(0.0, 1.0);
        let p_pos = (f64::from(affect) - 1.0) / 8.0;
        let echo: Vec<String> = req
            .messages
            .last()
            .map(|m| tokenize(&m.content))
            .unwrap_or_default();

        let n = rng.gen_range(env.min_words..=env.max_words);
        let mut out: Vec<&str> = Vec::with_capacity(n);
        let t_informal = env.informal_rate;
        let t_topic = t_informal + if cues.topic.is_empty() { 0.0 } else { env.topic_rate };
        let t_persona = t_topic + env.persona_rate;
        let t_affect = t_persona + env.affect_rate;
        let t_echo = t_affect + if echo.is_empty() { 0.0 } else { env.echo_rate };
        for _ in 0..n {
            let r: f64 = rng.gen();
            let word = if r < t_informal {
                Self::pick(&mut rng, &self.vocab.informal)
            } else if r < t_topic {
                Self::pick(&mut rng, &cues.topic)
            } else if r < t_persona {
                let list = match rng.gen_range(0..3) {
                    0 if rng.gen_bool(p_old) => &self.vocab.old,
                    0 => &self.vocab.young,
                    1 if gender == Sex::Female => &self.vocab.female,
                    1 => &self.vocab.male,
                    _ if rng.gen_bool(p_pos) => &self.vocab.positive,
                    _ => &self.vocab.negative,
                };
                Self::pick(&mut rng, list)
            } else if r < t_affect {
                let list = if rng.gen_bool(p_pos) {
                    &self.vocab.positive
                } else {
                    &self.vocab.negative
                };
                Self::pick(&mut rng, list)
            } else if r < t_echo {
                Self::pick(&mut rng, &echo)
            } else {
                Self::pick(&mut rng, &self.vocab.filler)
            };
            out.push(word.unwrap_or("ok"));
        }
        let mut text = out.join(" ");
        if let Some(c) = text.get(..1) {
            text.replace_range(..1, &c.to_uppercase());
        }
        text.push('.');
        text
    }
}

impl ChatClient for MockClient {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ChatError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(rec) = &self.recorder {
            rec.lock().unwrap_or_else(|p| p.into_inner()).push(RecordedCall {
                system: request.system.to_string(),
                messages: request.messages.to_vec(),
                seed: request.seed,
            });
        }
        if let Err(e) = validate_history(request.messages) {
            self.violations.fetch_add(1, Ordering::SeqCst);
            return Err(e);
        }
        let first = &request.messages[0].content;
        if request.messages.len() == 1 && first.starts_with(TOPIC_INSTRUCTION) {
            return Ok(self.summarize(first));
        }
        Ok(self.utterance(request))
    }

    fn id(&self) -> String {
        format!("mock:{}", self.seed)
    }
}

/// Replies `re: <last user message>`.
#[derive(Debug, Default)]
pub struct EchoClient;

impl ChatClient for EchoClient {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ChatError> {
        validate_history(request.messages)?;
        let last = request.messages.last().map(|m| m.content.as_str()).unwrap_or("");
        Ok(format!("re: {last}"))
    }

    fn id(&self) -> String {
        "echo".into()
    }
}

/// Fixed reply for every call.
#[derive(Debug, Clone)]
pub struct FixedClient(pub String);

impl ChatClient for FixedClient {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ChatError> {
        validate_history(request.messages)?;
        Ok(self.0.clone())
    }

    fn id(&self) -> String {
        "fixed".into()
    }
}

/// Delegates to `inner` but fails (non-retryably) on the `fail_on`-th call of
/// each conversation, counting calls per request seed.
pub struct FailingClient<C> {
    inner: C,
    fail_on: usize,
    per_seed: Mutex<std::collections::HashMap<u64, usize>>,
}

impl<C: ChatClient> FailingClient<C> {
    /// `fail_on` is 1-based.
    pub fn new(inner: C, fail_on: usize) -> Self {
        Self {
            inner,
            fail_on,
            per_seed: Mutex::new(Default::default()),
        }
    }
}

impl<C: ChatClient> ChatClient for FailingClient<C> {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ChatError> {
        let n = {
            let mut m = self.per_seed.lock().unwrap_or_else(|p| p.into_inner());
            let c = m.entry(request.seed).or_default();
            *c += 1;
            *c
        };
        if n == self.fail_on {
            return Err(ChatError::Unavailable(format!("injected failure on call {n}")));
        }
        self.inner.complete(request)
    }

    fn id(&self) -> String {
        format!("failing({})", self.inner.id())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req<'a>(system: &'a str, messages: &'a [Message], seed: u64) -> CompletionRequest<'a> {
        CompletionRequest { system, messages, seed }
    }

    #[test]
    fn max_words_caps_every_utterance() {
        let mock = MockClient::new(1, StyleProfile::llm_like().with_max_words(12));
        for seed in 0..100 {
            let msgs = [Message::user(format!("hello {seed}"))];
            let out = mock.complete(&req("", &msgs, seed)).unwrap();
            assert!(tokenize(&out).len() <= 12, "{out}");
        }
    }

    #[test]
    fn cues_from_rendered_prompt() {
        let sys = "Imagine that you are a female and 25 years old. You feel moderately positive feelings.";
        let opening = "Talk about whatever. If it fits the conversation, you should talk about one of the following topics: college football games.";
        let cues = parse_cues(sys, opening);
        assert_eq!(cues.age, Some(25));
        assert_eq!(cues.gender, Some(Sex::Female));
        assert_eq!(cues.affect, Some(7));
        assert_eq!(cues.topic, vec!["college", "football", "games"]);
    }

    #[test]
    fn invalid_history_is_counted() {
        let mock = MockClient::new(0, StyleProfile::default());
        let msgs = [Message::assistant("x")];
        assert!(mock.complete(&req("", &msgs, 0)).is_err());
        assert_eq!(mock.violations(), 1);
    }

    #[test]
    fn same_request_same_reply() {
        let mock = MockClient::new(3, StyleProfile::default());
        let msgs = [Message::user("hi")];
        let a = mock.complete(&req("sys", &msgs, 9)).unwrap();
        let b = mock.complete(&req("sys", &msgs, 9)).unwrap();
        let c = mock.complete(&req("sys", &msgs, 10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn summarizer_path() {
        let mock = MockClient::new(0, StyleProfile::default());
        let prompt = format!("{TOPIC_INSTRUCTION}\nI love cooking pasta\ncooking pasta is fun yeah\nbaking bread too");
        let msgs = [Message::user(prompt)];
        assert_eq!(mock.complete(&req("", &msgs, 0)).unwrap(), "cooking pasta baking");
    }

    #[test]
    fn failing_client_fails_on_nth_call_per_conversation() {
        let c = FailingClient::new(EchoClient, 2);
        let msgs = [Message::user("a")];
        assert!(c.complete(&req("", &msgs, 1)).is_ok());
        assert!(c.complete(&req("", &msgs, 1)).is_err());
        assert!(c.complete(&req("", &msgs, 1)).is_ok());
        assert!(c.complete(&req("", &msgs, 2)).is_ok());
    }
}
