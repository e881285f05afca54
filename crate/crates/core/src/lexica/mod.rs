//! Text scoring engine: tokenizer, weighted lexica (age, gender), category
//! dictionaries (affect, informal), topic distributions and turn length.

mod category;
mod tokenize;
mod topic;
mod weighted;

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Conversation, Turn};
use crate::simulate::scorer::{ScorerError, TextScorer};

pub use category::{score_category, CategoryDictionary, Pattern};
pub use tokenize::tokenize;
pub use topic::{topic_distribution, TopicLexicon};
pub use weighted::{score_weighted, WeightedLexicon, INTERCEPT_TERM};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("non-finite or negative weight for `{0}`")]
    NonFinite(String),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("pattern `{0}` maps to no category")]
    EmptyPattern(String),
    #[error("topic id {topic} outside 0..{topic_count}")]
    TopicOutOfRange { topic: usize, topic_count: usize },
    #[error("speaker `{0}` has no turns")]
    UnknownSpeaker(String),
    #[error("feature `{0}` is enabled but its lexicon is not configured")]
    MissingResource(Feature),
    #[error(transparent)]
    External(#[from] ScorerError),
}

impl LexiconError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        Self::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, LexiconError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    Age,
    Gender,
    Affect,
    Topic,
    Length,
    Informal,
    /// Turn-level score from an external style model.
    Formal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Turn,
    Speaker,
}

impl Feature {
    pub const ALL: [Feature; 7] = [
        Feature::Age,
        Feature::Gender,
        Feature::Affect,
        Feature::Topic,
        Feature::Length,
        Feature::Informal,
        Feature::Formal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Age => "age",
            Feature::Gender => "gender",
            Feature::Affect => "affect",
            Feature::Topic => "topic",
            Feature::Length => "length",
            Feature::Informal => "informal",
            Feature::Formal => "formal",
        }
    }

    pub fn level(self) -> Level {
        match self {
            Feature::Length | Feature::Informal | Feature::Formal => Level::Turn,
            _ => Level::Speaker,
        }
    }

    pub fn is_vector(self) -> bool {
        self == Feature::Topic
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Feature {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown feature `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "unit", rename_all = "lowercase")]
pub enum UnitId {
    Speaker { speaker_id: String },
    Turn { conversation_id: String, speaker_id: String, index: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl FeatureValue {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            FeatureValue::Scalar(x) => Some(*x),
            FeatureValue::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            FeatureValue::Vector(v) => Some(v),
            FeatureValue::Scalar(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSample {
    #[serde(flatten)]
    pub unit: UnitId,
    pub feature: Feature,
    pub value: FeatureValue,
}

/// Sign discretisation of a gender score: `1` female, `-1` male; a zero
/// score resolves to `1`.
pub fn discretize_gender(score: f64) -> i8 {
    if score < 0.0 {
        -1
    } else {
        1
    }
}

pub fn turn_length(turn: &Turn) -> usize {
    tokenize(&turn.text).len()
}

/// The scorer configuration applied identically to human and generated text.
#[derive(Clone)]
pub struct ScorerSet {
    pub features: Vec<Feature>,
    pub age: Option<WeightedLexicon>,
    pub gender: Option<WeightedLexicon>,
    pub dictionary: Option<CategoryDictionary>,
    pub affect_category: String,
    pub informal_category: String,
    pub topics: Option<TopicLexicon>,
    pub formal: Option<Arc<dyn TextScorer>>,
}

impl fmt::Debug for ScorerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScorerSet")
            .field("features", &self.features)
            .field("affect_category", &self.affect_category)
            .field("informal_category", &self.informal_category)
            .field("formal", &self.formal.is_some())
            .finish_non_exhaustive()
    }
}

impl Default for ScorerSet {
    fn default() -> Self {
        Self {
            features: vec![Feature::Length],
            age: None,
            gender: None,
            dictionary: None,
            affect_category: "affect".into(),
            informal_category: "informal".into(),
            topics: None,
            formal: None,
        }
    }
}

impl ScorerSet {
    /// Checks that every enabled feature has what it needs.
    pub fn validate(&self) -> Result<()> {
        for &f in &self.features {
            let ok = match f {
                Feature::Age => self.age.is_some(),
                Feature::Gender => self.gender.is_some(),
                Feature::Affect | Feature::Informal => {
                    let cat = if f == Feature::Affect {
                        &self.affect_category
                    } else {
                        &self.informal_category
                    };
                    match &self.dictionary {
                        Some(d) if !d.has_category(cat) => {
                            return Err(LexiconError::UnknownCategory(cat.clone()))
                        }
                        Some(_) => true,
                        None => false,
                    }
                }
                Feature::Topic => self.topics.is_some(),
                Feature::Length => true,
                Feature::Formal => self.formal.is_some(),
            };
            if !ok {
                return Err(LexiconError::MissingResource(f));
            }
        }
        Ok(())
    }

    pub fn enabled(&self, f: Feature) -> bool {
        self.features.contains(&f)
    }

    fn resource<'a, T>(&self, r: &'a Option<T>, f: Feature) -> Result<&'a T> {
        r.as_ref().ok_or(LexiconError::MissingResource(f))
    }
}

/// Scores one speaker across every conversation they appear in. Speaker-level
/// features are computed on the concatenated tokens of all their turns;
/// turn-level features yield one sample per turn.
pub fn score_speaker(
    conversations: &[Conversation],
    speaker_id: &str,
    scorers: &ScorerSet,
) -> Result<Vec<FeatureSample>> {
    let turns: Vec<(&str, &Turn)> = conversations
        .iter()
        .flat_map(|c| {
            c.turns_of(speaker_id)
                .map(move |t| (c.conversation_id.as_str(), t))
        })
        .collect();
    if turns.is_empty() {
        return Err(LexiconError::UnknownSpeaker(speaker_id.to_string()));
    }
    let per_turn: Vec<Vec<String>> = turns.iter().map(|(_, t)| tokenize(&t.text)).collect();
    let all: Vec<String> = per_turn.iter().flatten().cloned().collect();
    let speaker_unit = || UnitId::Speaker {
        speaker_id: speaker_id.to_string(),
    };
    let turn_unit = |i: usize| UnitId::Turn {
        conversation_id: turns[i].0.to_string(),
        speaker_id: speaker_id.to_string(),
        index: turns[i].1.index,
    };

    let mut out = Vec::new();
    for &feature in &scorers.features {
        match feature {
            Feature::Age => {
                let lex = scorers.resource(&scorers.age, feature)?;
                out.push(FeatureSample {
                    unit: speaker_unit(),
                    feature,
                    value: FeatureValue::Scalar(score_weighted(&all, lex)),
                });
            }
            Feature::Gender => {
                let lex = scorers.resource(&scorers.gender, feature)?;
                let g = discretize_gender(score_weighted(&all, lex));
                out.push(FeatureSample {
                    unit: speaker_unit(),
                    feature,
                    value: FeatureValue::Scalar(f64::from(g)),
                });
            }
            Feature::Affect => {
                let dict = scorers.resource(&scorers.dictionary, feature)?;
                out.push(FeatureSample {
                    unit: speaker_unit(),
                    feature,
                    value: FeatureValue::Scalar(score_category(&all, dict, &scorers.affect_category)?),
                });
            }
            Feature::Topic => {
                let topics = scorers.resource(&scorers.topics, feature)?;
                out.push(FeatureSample {
                    unit: speaker_unit(),
                    feature,
                    value: FeatureValue::Vector(topic_distribution(&all, topics)),
                });
            }
            Feature::Length => {
                for (i, toks) in per_turn.iter().enumerate() {
                    out.push(FeatureSample {
                        unit: turn_unit(i),
                        feature,
                        value: FeatureValue::Scalar(toks.len() as f64),
                    });
                }
            }
            Feature::Informal => {
                let dict = scorers.resource(&scorers.dictionary, feature)?;
                for (i, toks) in per_turn.iter().enumerate() {
                    out.push(FeatureSample {
                        unit: turn_unit(i),
                        feature,
                        value: FeatureValue::Scalar(score_category(toks, dict, &scorers.informal_category)?),
                    });
                }
            }
            Feature::Formal => {
                let scorer = scorers.resource(&scorers.formal, feature)?;
                let texts: Vec<String> = turns.iter().map(|(_, t)| t.text.clone()).collect();
                let scores = scorer.score_texts(&texts)?;
                for (i, s) in scores.into_iter().enumerate() {
                    out.push(FeatureSample {
                        unit: turn_unit(i),
                        feature,
                        value: FeatureValue::Scalar(s),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Scores many speakers in parallel; output order follows `speakers`.
pub fn score_speakers(
    conversations: &[Conversation],
    speakers: &[String],
    scorers: &ScorerSet,
) -> Result<Vec<Vec<FeatureSample>>> {
    speakers
        .par_iter()
        .map(|s| score_speaker(conversations, s, scorers))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv(id: &str, turns: &[(&str, &str)]) -> Conversation {
        Conversation::new(
            id,
            turns
                .iter()
                .enumerate()
                .map(|(i, (s, t))| Turn {
                    speaker_id: s.to_string(),
                    index: i as u32,
                    text: t.to_string(),
                })
                .collect(),
        )
    }

    fn age_scorers() -> ScorerSet {
        ScorerSet {
            features: vec![Feature::Age],
            age: Some(WeightedLexicon::from_entries("age", 20.0, [("old", 10.0)]).unwrap()),
            ..Default::default()
        }
    }

    #[test]
    fn gender_sign_and_tie_break() {
        assert_eq!(discretize_gender(0.37), 1);
        assert_eq!(discretize_gender(-2.1), -1);
        assert_eq!(discretize_gender(0.0), 1);
        assert_eq!(discretize_gender(-0.0), 1);
    }

    #[test]
    fn turn_length_counts_tokens() {
        let t = |s: &str| Turn {
            speaker_id: "a".into(),
            index: 0,
            text: s.into(),
        };
        assert_eq!(turn_length(&t("Hi there")), 2);
        assert_eq!(turn_length(&t("")), 0);
    }

    #[test]
    fn speaker_level_concatenates_turns() {
        let c = conv("c", &[("a", "old old"), ("b", "x"), ("a", "new new")]);
        let s = score_speaker(&[c], "a", &age_scorers()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].value, FeatureValue::Scalar(25.0));
    }

    #[test]
    fn single_turn_speaker_level_equals_turn_level() {
        let c = conv("c", &[("a", "old new new new"), ("b", "x")]);
        let s = score_speaker(std::slice::from_ref(&c), "a", &age_scorers()).unwrap();
        let direct = score_weighted(&tokenize(&c.turns[0].text), age_scorers().age.as_ref().unwrap());
        assert_eq!(s[0].value, FeatureValue::Scalar(direct));
    }

    #[test]
    fn unknown_speaker_errors() {
        let c = conv("c", &[("a", "hi")]);
        assert!(matches!(
            score_speaker(&[c], "zzz", &age_scorers()),
            Err(LexiconError::UnknownSpeaker(_))
        ));
    }

    #[test]
    fn speakers_are_independent_of_conversation_order() {
        let c1 = conv("c1", &[("a", "old hi"), ("b", "new")]);
        let c2 = conv("c2", &[("c", "old old old"), ("d", "x")]);
        let sc = age_scorers();
        let fwd = score_speaker(&[c1.clone(), c2.clone()], "a", &sc).unwrap();
        let rev = score_speaker(&[c2, c1], "a", &sc).unwrap();
        assert_eq!(fwd, rev);
    }

    #[test]
    fn turn_level_features_emit_one_sample_per_turn() {
        let mut dict = CategoryDictionary::new(["informal", "affect"]);
        dict.add_pattern("lol", ["informal"]).unwrap();
        let sc = ScorerSet {
            features: vec![Feature::Length, Feature::Informal],
            dictionary: Some(dict),
            ..Default::default()
        };
        sc.validate().unwrap();
        let c = conv("c", &[("a", "lol ok"), ("b", "x"), ("a", "fine")]);
        let s = score_speaker(&[c], "a", &sc).unwrap();
        let values: Vec<(Feature, f64)> = s
            .iter()
            .map(|x| (x.feature, x.value.as_scalar().unwrap()))
            .collect();
        assert_eq!(
            values,
            vec![
                (Feature::Length, 2.0),
                (Feature::Length, 1.0),
                (Feature::Informal, 0.5),
                (Feature::Informal, 0.0)
            ]
        );
    }

    #[test]
    fn validate_reports_missing_lexicon() {
        let sc = ScorerSet {
            features: vec![Feature::Topic],
            ..Default::default()
        };
        assert!(matches!(sc.validate(), Err(LexiconError::MissingResource(Feature::Topic))));
    }

    #[test]
    fn sample_json_shape() {
        let s = FeatureSample {
            unit: UnitId::Speaker {
                speaker_id: "s1".into(),
            },
            feature: Feature::Age,
            value: FeatureValue::Scalar(25.0),
        };
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"unit":"speaker","speaker_id":"s1","feature":"age","value":25.0}"#);
        let back: FeatureSample = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
