//! Prompt search by coordinate descent over the variant registry.
//!
//! Each evaluation generates a dialogue batch for one variant set, scores it
//! against the human reference with the same scorers, and reduces the
//! report to a scalar objective (weighted mean error of average).

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Conversation, Corpus};
use crate::features::PersonaFeatures;
use crate::lexica::{score_speakers, Feature, FeatureSample, LexiconError, ScorerSet};
use crate::metrics::{build_report, MetricError, MetricReport, ReportMeta, SpeakerPairing};
use crate::prompts::{PromptError, PromptRegistry, PromptVariantSet};
use crate::simulate::{persona_pairs, run_batch, BatchOptions, ChatClient, DialogueSet, PersonaPair, SimulateError};
use crate::util::content_hash;

pub const DEFAULT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("objective weights must be non-negative with a positive sum")]
    InvalidWeights,
    #[error("objective has no features")]
    EmptyObjective,
    #[error("objective targets {0} but no scorer is configured for it")]
    UnscoredFeature(Feature),
    #[error("error of average for {0} is undefined in this report")]
    UndefinedMetric(Feature),
    #[error("budget must have positive pairs, replicates and turns")]
    InvalidBudget,
    #[error("axis `{0}` has no variants")]
    EmptyAxis(String),
    #[error("no persona pairs available for evaluation")]
    NoPairs,
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("evaluation store: {0}")]
    Store(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, OptimizeError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    /// Normalised to sum 1 by `new`.
    pub weights: BTreeMap<Feature, f64>,
    /// Axis name → features judging that axis (uniform weights).
    #[serde(default)]
    pub axis_overrides: BTreeMap<String, Vec<Feature>>,
    pub tolerance: f64,
}

impl Objective {
    pub fn new(weights: impl IntoIterator<Item = (Feature, f64)>) -> Result<Self> {
        let weights: BTreeMap<Feature, f64> = weights.into_iter().collect();
        if weights.is_empty() {
            return Err(OptimizeError::EmptyObjective);
        }
        let total: f64 = weights.values().sum();
        if weights.values().any(|w| !w.is_finite() || *w < 0.0) || total <= 0.0 {
            return Err(OptimizeError::InvalidWeights);
        }
        Ok(Self {
            weights: weights.into_iter().map(|(f, w)| (f, w / total)).collect(),
            axis_overrides: BTreeMap::new(),
            tolerance: DEFAULT_TOLERANCE,
        })
    }

    pub fn uniform(features: &[Feature]) -> Result<Self> {
        Self::new(features.iter().map(|f| (*f, 1.0)))
    }

    pub fn with_override(mut self, axis: &str, features: &[Feature]) -> Self {
        self.axis_overrides.insert(axis.to_string(), features.to_vec());
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    /// Every targeted feature, weighted or override.
    pub fn features(&self) -> Vec<Feature> {
        let mut all: Vec<Feature> = self.weights.keys().copied().collect();
        for fs in self.axis_overrides.values() {
            all.extend(fs);
        }
        all.sort();
        all.dedup();
        all
    }

    pub fn validate(&self, scorers: &ScorerSet) -> Result<()> {
        for f in self.features() {
            if !scorers.enabled(f) {
                return Err(OptimizeError::UnscoredFeature(f));
            }
        }
        Ok(())
    }

    fn error_of_average(report: &MetricReport, f: Feature) -> Result<f64> {
        report
            .feature(f)
            .and_then(|r| r.error_of_average)
            .ok_or(OptimizeError::UndefinedMetric(f))
    }

    pub fn value(&self, report: &MetricReport) -> Result<f64> {
        let mut total = 0.0;
        for (&f, &w) in &self.weights {
            if w > 0.0 {
                total += w * Self::error_of_average(report, f)?;
            }
        }
        Ok(total)
    }

    pub fn axis_value(&self, axis: &str, report: &MetricReport) -> Result<f64> {
        match self.axis_overrides.get(axis) {
            Some(fs) if !fs.is_empty() => {
                let mut total = 0.0;
                for &f in fs {
                    total += Self::error_of_average(report, f)?;
                }
                Ok(total / fs.len() as f64)
            }
            _ => self.value(report),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub pairs: usize,
    pub replicates: u32,
    pub turns: usize,
    /// Cap on distinct variant sets evaluated; `None` is unbounded.
    #[serde(default)]
    pub max_evaluations: Option<usize>,
}

impl Budget {
    pub fn validate(&self) -> Result<()> {
        if self.pairs == 0 || self.replicates == 0 || self.turns == 0 {
            return Err(OptimizeError::InvalidBudget);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub variants: PromptVariantSet,
    pub report: MetricReport,
    pub objective: f64,
    #[serde(skip)]
    pub dialogues: DialogueSet,
}

/// Fixed inputs shared by every evaluation: the pair sample, its human
/// feature samples, and the batch settings.
pub struct Evaluator<'a> {
    pub registry: &'a PromptRegistry,
    pub client: &'a dyn ChatClient,
    pub scorers: &'a ScorerSet,
    pub objective: &'a Objective,
    pub budget: Budget,
    pub seed: u64,
    pub workers: usize,
    pub min_success_fraction: f64,
    pub include_truncated: bool,
    pairs: Vec<PersonaPair>,
    human_samples: Vec<FeatureSample>,
}

impl<'a> Evaluator<'a> {
    /// Selects the first `budget.pairs` conversations with personas and
    /// scores their human speakers once.
    pub fn new(
        corpus: &Corpus,
        personas: &[PersonaFeatures],
        registry: &'a PromptRegistry,
        client: &'a dyn ChatClient,
        scorers: &'a ScorerSet,
        objective: &'a Objective,
        budget: Budget,
        seed: u64,
    ) -> Result<Self> {
        budget.validate()?;
        scorers.validate()?;
        objective.validate(scorers)?;
        let pairs = persona_pairs(corpus, personas, Some(budget.pairs));
        if pairs.is_empty() {
            return Err(OptimizeError::NoPairs);
        }
        let sources: Vec<Conversation> = pairs
            .iter()
            .filter_map(|p| corpus.conversation(&p.pair_id).cloned())
            .collect();
        let speakers: Vec<String> = pairs
            .iter()
            .flat_map(|p| [p.a.speaker_id.clone(), p.b.speaker_id.clone()])
            .collect();
        let human_samples = score_speakers(&sources, &speakers, scorers)?.into_iter().flatten().collect();
        Ok(Self {
            registry,
            client,
            scorers,
            objective,
            budget,
            seed,
            workers: 0,
            min_success_fraction: 0.9,
            include_truncated: false,
            pairs,
            human_samples,
        })
    }

    pub fn pairs(&self) -> &[PersonaPair] {
        &self.pairs
    }

    pub fn human_samples(&self) -> &[FeatureSample] {
        &self.human_samples
    }

    fn batch_options(&self) -> BatchOptions {
        BatchOptions {
            replicates: self.budget.replicates,
            turns: self.budget.turns,
            master_seed: self.seed,
            workers: self.workers,
            min_success_fraction: self.min_success_fraction,
        }
    }

    /// Scores an existing dialogue set against the human sample.
    pub fn score(&self, dialogues: &DialogueSet) -> Result<MetricReport> {
        let humans: Vec<String> = self
            .pairs
            .iter()
            .flat_map(|p| [p.a.speaker_id.clone(), p.b.speaker_id.clone()])
            .collect();
        compare_dialogues(&self.human_samples, &humans, dialogues, self.scorers, self.include_truncated)
    }

    pub fn evaluate(&self, variants: &PromptVariantSet) -> Result<Evaluation> {
        let dialogues = run_batch(&self.pairs, variants, self.registry, self.client, &self.batch_options())?;
        let report = self.score(&dialogues)?;
        let objective = self.objective.value(&report)?;
        Ok(Evaluation {
            variants: variants.clone(),
            report,
            objective,
            dialogues,
        })
    }
}

/// Scores the human side of the conversations a dialogue set was generated
/// from.
pub fn human_samples_for(corpus: &Corpus, dialogues: &DialogueSet, scorers: &ScorerSet) -> Result<(Vec<String>, Vec<FeatureSample>)> {
    let mut pair_ids: Vec<&str> = dialogues.conversations.iter().map(|c| c.pair_id.as_str()).collect();
    pair_ids.dedup();
    let sources: Vec<Conversation> = pair_ids
        .iter()
        .filter_map(|id| corpus.conversation(id).cloned())
        .collect();
    let humans: Vec<String> = dialogues
        .mapping
        .keys()
        .filter(|h| sources.iter().any(|c| c.participants.contains(h)))
        .cloned()
        .collect();
    let samples = score_speakers(&sources, &humans, scorers)?.into_iter().flatten().collect();
    Ok((humans, samples))
}

/// Builds the metric report for `dialogues` against pre-scored human
/// samples. Truncated conversations are dropped unless `include_truncated`.
pub fn compare_dialogues(
    human_samples: &[FeatureSample],
    human_speakers: &[String],
    dialogues: &DialogueSet,
    scorers: &ScorerSet,
    include_truncated: bool,
) -> Result<MetricReport> {
    let conversations = dialogues.as_conversations(include_truncated);
    let present: std::collections::HashSet<&str> = conversations
        .iter()
        .flat_map(|c| c.participants.iter().map(String::as_str))
        .collect();
    let pairing: Vec<SpeakerPairing> = human_speakers
        .iter()
        .filter_map(|h| {
            let g = dialogues.mapping.get(h)?;
            present.contains(g.as_str()).then(|| SpeakerPairing {
                human: h.clone(),
                generated: g.clone(),
            })
        })
        .collect();
    let generated_ids: Vec<String> = pairing.iter().map(|p| p.generated.clone()).collect();
    let generated = score_speakers(&conversations, &generated_ids, scorers)?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    let meta = ReportMeta {
        variant_id: dialogues.variant_id.clone(),
        level: None,
        human_speakers: human_speakers.len(),
        generated_speakers: generated_ids.len(),
        generated_conversations: conversations.len(),
        truncated_excluded: if include_truncated { 0 } else { dialogues.truncated_count() },
    };
    Ok(build_report(human_samples, &generated, &pairing, &scorers.features, meta)?)
}

/// Persists evaluations so an interrupted search can resume without
/// regenerating dialogue.
pub trait EvaluationStore {
    fn load(&mut self, variants: &PromptVariantSet) -> Result<Option<Evaluation>>;
    fn save(&mut self, evaluation: &Evaluation) -> Result<()>;
}

/// Keeps nothing.
#[derive(Debug, Default)]
pub struct NoStore;

impl EvaluationStore for NoStore {
    fn load(&mut self, _: &PromptVariantSet) -> Result<Option<Evaluation>> {
        Ok(None)
    }
    fn save(&mut self, _: &Evaluation) -> Result<()> {
        Ok(())
    }
}

/// One subdirectory per variant set, named by the hash of its key:
/// `evaluation.json` plus the dialogue JSONL and manifest.
#[derive(Debug, Clone)]
pub struct DirStore {
    root: PathBuf,
}

impl DirStore {
    pub fn new(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn entry_dir(&self, variants: &PromptVariantSet) -> PathBuf {
        self.root.join(&content_hash(variants.key().as_bytes())[..16])
    }
}

impl EvaluationStore for DirStore {
    fn load(&mut self, variants: &PromptVariantSet) -> Result<Option<Evaluation>> {
        let dir = self.entry_dir(variants);
        let path = dir.join("evaluation.json");
        if !path.exists() {
            return Ok(None);
        }
        let mut eval: Evaluation = serde_json::from_reader(BufReader::new(File::open(&path)?))
            .map_err(|e| OptimizeError::Store(format!("{}: {e}", path.display())))?;
        if &eval.variants != variants {
            return Err(OptimizeError::Store(format!("{}: variant set mismatch", path.display())));
        }
        eval.dialogues = DialogueSet::load(&dir, "dialogues")?;
        Ok(Some(eval))
    }

    fn save(&mut self, evaluation: &Evaluation) -> Result<()> {
        let dir = self.entry_dir(&evaluation.variants);
        evaluation.dialogues.save(&dir, "dialogues")?;
        // written last so a partial entry is never mistaken for a complete one
        let tmp = dir.join("evaluation.json.tmp");
        let mut w = BufWriter::new(File::create(&tmp)?);
        serde_json::to_writer_pretty(&mut w, evaluation).map_err(io::Error::other)?;
        w.flush()?;
        drop(w);
        fs::rename(tmp, dir.join("evaluation.json"))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: usize,
    pub pass: usize,
    /// Axis being varied; `None` for the starting point.
    pub axis: Option<String>,
    pub variants: PromptVariantSet,
    pub objective: f64,
    pub axis_objective: f64,
    pub adopted: bool,
    pub cached: bool,
    pub report: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationState {
    pub best_variants: PromptVariantSet,
    #[serde(skip)]
    pub best_dialogues: DialogueSet,
    pub best_score: f64,
    pub best_report: MetricReport,
    pub trace: Vec<TraceEntry>,
    pub passes: usize,
    /// Distinct variant sets evaluated (including ones loaded from a store).
    pub evaluations: usize,
    pub exhausted: bool,
}

impl OptimizationState {
    pub fn write_trace<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.trace {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Objective values of adopted entries, in order.
    pub fn adopted_objectives(&self) -> Vec<f64> {
        self.trace.iter().filter(|e| e.adopted).map(|e| e.objective).collect()
    }
}

/// Content hash identifying a search: same axes, objective, budget, seed and
/// backend give the same key.
pub fn run_key(registry: &PromptRegistry, objective: &Objective, budget: &Budget, seed: u64, backend: &str) -> String {
    let doc = serde_json::json!({
        "registry": registry,
        "objective": objective,
        "budget": budget,
        "seed": seed,
        "backend": backend,
    });
    content_hash(doc.to_string().as_bytes())[..16].to_string()
}

struct Search<'e, 'a> {
    evaluator: &'e Evaluator<'a>,
    store: &'e mut dyn EvaluationStore,
    cache: HashMap<String, Evaluation>,
    evaluations: usize,
}

impl Search<'_, '_> {
    /// Returns `(evaluation, cached)`, or `None` when the budget is spent.
    fn get(&mut self, variants: &PromptVariantSet) -> Result<Option<(Evaluation, bool)>> {
        let key = variants.key();
        if let Some(e) = self.cache.get(&key) {
            return Ok(Some((e.clone(), true)));
        }
        if let Some(max) = self.evaluator.budget.max_evaluations {
            if self.evaluations >= max {
                return Ok(None);
            }
        }
        let eval = match self.store.load(variants)? {
            Some(e) => e,
            None => {
                let e = self.evaluator.evaluate(variants)?;
                self.store.save(&e)?;
                e
            }
        };
        self.evaluations += 1;
        self.cache.insert(key, eval.clone());
        Ok(Some((eval, false)))
    }
}

/// Coordinate descent from `initial`. For each axis in registry order, every
/// other variant of that axis is evaluated with the remaining axes held at
/// the current best. The candidate with the lowest axis objective is adopted
/// iff it beats the current axis objective by more than the tolerance and
/// lowers the global objective. Passes repeat until one adopts nothing.
pub fn optimize(
    evaluator: &Evaluator<'_>,
    initial: &PromptVariantSet,
    store: &mut dyn EvaluationStore,
) -> Result<OptimizationState> {
    let registry = evaluator.registry;
    for axis in &registry.axes {
        if axis.variants.is_empty() {
            return Err(OptimizeError::EmptyAxis(axis.name.clone()));
        }
    }
    registry.check(initial)?;
    let objective = evaluator.objective;
    let eps = objective.tolerance;
    let mut search = Search {
        evaluator,
        store,
        cache: HashMap::new(),
        evaluations: 0,
    };

    let (start, _) = search.get(initial)?.ok_or(OptimizeError::InvalidBudget)?;
    let mut state = OptimizationState {
        best_variants: initial.clone(),
        best_score: start.objective,
        best_report: start.report.clone(),
        best_dialogues: start.dialogues.clone(),
        trace: vec![TraceEntry {
            step: 0,
            pass: 0,
            axis: None,
            variants: initial.clone(),
            objective: start.objective,
            axis_objective: start.objective,
            adopted: true,
            cached: false,
            report: start.report,
        }],
        passes: 0,
        evaluations: 0,
        exhausted: false,
    };

    'passes: loop {
        state.passes += 1;
        let pass = state.passes;
        let mut adopted_any = false;
        for axis in &registry.axes {
            let current_axis = objective.axis_value(&axis.name, &state.best_report)?;
            let mut best: Option<(usize, f64)> = None;
            let mut candidates = Vec::new();
            for variant in &axis.variants {
                let vs = state.best_variants.with(&axis.name, &variant.id);
                if vs == state.best_variants {
                    continue;
                }
                let Some((eval, cached)) = search.get(&vs)? else {
                    state.exhausted = true;
                    break 'passes;
                };
                let axis_obj = objective.axis_value(&axis.name, &eval.report)?;
                state.trace.push(TraceEntry {
                    step: state.trace.len(),
                    pass,
                    axis: Some(axis.name.clone()),
                    variants: vs,
                    objective: eval.objective,
                    axis_objective: axis_obj,
                    adopted: false,
                    cached,
                    report: eval.report.clone(),
                });
                if best.is_none_or(|(_, b)| axis_obj < b) {
                    best = Some((state.trace.len() - 1, axis_obj));
                }
                candidates.push(eval);
            }
            let Some((idx, axis_obj)) = best else { continue };
            let entry = &mut state.trace[idx];
            if axis_obj < current_axis - eps && entry.objective < state.best_score {
                entry.adopted = true;
                let eval = candidates
                    .into_iter()
                    .find(|e| e.variants == entry.variants)
                    .expect("candidate evaluated in this step");
                tracing::info!(axis = %axis.name, variants = %eval.variants, objective = eval.objective, "adopted");
                state.best_variants = eval.variants;
                state.best_score = eval.objective;
                state.best_report = eval.report;
                state.best_dialogues = eval.dialogues;
                adopted_any = true;
            }
        }
        if !adopted_any {
            break;
        }
    }
    state.evaluations = search.evaluations;
    Ok(state)
}

/// Writes `trace.jsonl`, `best.json` and the best dialogues under `dir`.
pub fn save_state(state: &OptimizationState, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join("trace.jsonl"))?);
    state.write_trace(&mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(dir.join("best.json"))?);
    serde_json::to_writer_pretty(
        &mut w,
        &serde_json::json!({
            "best_variants": state.best_variants,
            "best_score": state.best_score,
            "passes": state.passes,
            "evaluations": state.evaluations,
            "exhausted": state.exhausted,
        }),
    )?;
    w.write_all(b"\n")?;
    w.flush()?;
    state.best_dialogues.save(dir, "best_dialogues")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Conversation, Sex, SpeakerRecord, Turn};
    use crate::prompts::registry;
    use crate::simulate::{FixedClient, MockClient, StyleProfile};

    pub(crate) fn tiny_corpus(n: usize) -> (Corpus, Vec<PersonaFeatures>) {
        let mut corpus = Corpus::default();
        let mut personas = Vec::new();
        for i in 0..n {
            let (a, b) = (format!("h{i}a"), format!("h{i}b"));
            for (id, sex) in [(&a, Sex::Female), (&b, Sex::Male)] {
                corpus.speakers.insert(
                    id.clone(),
                    SpeakerRecord {
                        speaker_id: id.clone(),
                        age: Some(30),
                        sex: Some(sex),
                        overall_affect: Some(5),
                    },
                );
                personas.push(PersonaFeatures {
                    speaker_id: id.clone(),
                    age: 30,
                    gender: sex,
                    affect_phrase: "neutral".into(),
                    topic_phrase: "cooking pasta".into(),
                    source_conversation_id: format!("c{i}"),
                });
            }
            let turns = (0..8)
                .map(|k| Turn {
                    speaker_id: if k % 2 == 0 { a.clone() } else { b.clone() },
                    index: k,
                    text: "yeah i think so lol".into(),
                })
                .collect();
            corpus.conversations.push(Conversation::new(format!("c{i}"), turns));
        }
        (corpus, personas)
    }

    fn budget() -> Budget {
        Budget {
            pairs: 3,
            replicates: 1,
            turns: 4,
            max_evaluations: None,
        }
    }

    #[test]
    fn objective_weights_normalise_and_validate() {
        let o = Objective::new([(Feature::Length, 3.0), (Feature::Informal, 1.0)]).unwrap();
        assert_eq!(o.weights[&Feature::Length], 0.75);
        assert!(Objective::new([(Feature::Length, -1.0)]).is_err());
        assert!(Objective::new([(Feature::Length, 0.0)]).is_err());
        assert!(Objective::new(Vec::new()).is_err());
        let scorers = ScorerSet::default();
        assert!(matches!(
            Objective::uniform(&[Feature::Age]).unwrap().validate(&scorers),
            Err(OptimizeError::UnscoredFeature(Feature::Age))
        ));
    }

    #[test]
    fn evaluation_is_deterministic() {
        let (corpus, personas) = tiny_corpus(3);
        let reg = registry();
        let mock = MockClient::new(1, StyleProfile::default());
        let scorers = ScorerSet::default();
        let obj = Objective::uniform(&[Feature::Length]).unwrap();
        let ev = Evaluator::new(&corpus, &personas, &reg, &mock, &scorers, &obj, budget(), 5).unwrap();
        let a = ev.evaluate(&reg.baseline()).unwrap();
        let b = ev.evaluate(&reg.baseline()).unwrap();
        assert_eq!(a.objective, b.objective);
        assert!(a.objective > 0.0);
    }

    #[test]
    fn identical_variants_stop_after_one_pass() {
        let (corpus, personas) = tiny_corpus(2);
        let reg = registry();
        let client = FixedClient("same words every time".into());
        let scorers = ScorerSet::default();
        let obj = Objective::uniform(&[Feature::Length]).unwrap();
        let ev = Evaluator::new(&corpus, &personas, &reg, &client, &scorers, &obj, budget(), 5).unwrap();
        let state = optimize(&ev, &reg.baseline(), &mut NoStore).unwrap();
        assert_eq!(state.passes, 1);
        assert_eq!(state.best_variants, reg.baseline());
        assert_eq!(state.adopted_objectives().len(), 1);
    }

    #[test]
    fn length_prompt_is_adopted_and_never_worse_than_start() {
        let (corpus, personas) = tiny_corpus(3);
        let reg = registry();
        let mock = MockClient::new(1, StyleProfile::default());
        let scorers = ScorerSet::default();
        let obj = Objective::uniform(&[Feature::Length]).unwrap();
        let ev = Evaluator::new(&corpus, &personas, &reg, &mock, &scorers, &obj, budget(), 5).unwrap();
        let state = optimize(&ev, &reg.baseline(), &mut NoStore).unwrap();
        assert_eq!(state.best_variants.get("length"), Some("present"));
        assert!(state.best_score <= state.trace[0].objective);
        let adopted = state.adopted_objectives();
        assert!(adopted.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn budget_exhaustion_returns_best_so_far() {
        let (corpus, personas) = tiny_corpus(2);
        let reg = registry();
        let mock = MockClient::new(1, StyleProfile::default());
        let scorers = ScorerSet::default();
        let obj = Objective::uniform(&[Feature::Length]).unwrap();
        let b = Budget {
            max_evaluations: Some(2),
            ..budget()
        };
        let ev = Evaluator::new(&corpus, &personas, &reg, &mock, &scorers, &obj, b, 5).unwrap();
        let state = optimize(&ev, &reg.baseline(), &mut NoStore).unwrap();
        assert!(state.exhausted);
        assert_eq!(state.evaluations, 2);
    }

    #[test]
    fn resume_from_store_reproduces_state_without_backend_calls() {
        let (corpus, personas) = tiny_corpus(2);
        let reg = registry();
        let scorers = ScorerSet::default();
        let obj = Objective::uniform(&[Feature::Length]).unwrap();
        let dir = tempfile::tempdir().unwrap();

        let first = MockClient::new(1, StyleProfile::default());
        let ev = Evaluator::new(&corpus, &personas, &reg, &first, &scorers, &obj, budget(), 5).unwrap();
        let a = optimize(&ev, &reg.baseline(), &mut DirStore::new(dir.path()).unwrap()).unwrap();

        let second = MockClient::new(1, StyleProfile::default());
        let ev = Evaluator::new(&corpus, &personas, &reg, &second, &scorers, &obj, budget(), 5).unwrap();
        let b = optimize(&ev, &reg.baseline(), &mut DirStore::new(dir.path()).unwrap()).unwrap();
        assert_eq!(second.calls(), 0);
        assert_eq!(a, b);
        assert_eq!(a.best_dialogues, b.best_dialogues);
    }

    #[test]
    fn run_key_changes_with_seed() {
        let reg = registry();
        let obj = Objective::uniform(&[Feature::Length]).unwrap();
        assert_ne!(run_key(&reg, &obj, &budget(), 1, "m"), run_key(&reg, &obj, &budget(), 2, "m"));
        assert_eq!(run_key(&reg, &obj, &budget(), 1, "m"), run_key(&reg, &obj, &budget(), 1, "m"));
    }
}
