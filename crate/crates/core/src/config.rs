//! Pipeline configuration: one TOML document, `${VAR}` interpolated from the
//! environment before parsing, relative paths resolved against the file's
//! directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusFormat;
use crate::features::{ExtractOptions, TOPIC_WINDOW};
use crate::lexica::{CategoryDictionary, Feature, LexiconError, ScorerSet, TopicLexicon, WeightedLexicon};
use crate::optimize::{Budget, Objective, OptimizeError, DEFAULT_TOLERANCE};
use crate::prompts::{PromptConfig, PromptError, PromptRegistry};
use crate::simulate::{
    ChatClient, ChatError, ExternalScorer, HttpBackendConfig, HttpChatClient, MockClient, StyleProfile,
    DEFAULT_TURNS,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("environment variable `{0}` referenced in config is not set")]
    MissingEnv(String),
    #[error("unterminated `${{` in config")]
    UnterminatedVar,
    #[error("{what} not found: {path}")]
    MissingFile { what: String, path: PathBuf },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Objective(#[from] OptimizeError),
    #[error(transparent)]
    Backend(#[from] ChatError),
}

pub type Result<T> = std::result::Result<T, ConfigError>;

/// Replaces `${NAME}` with the value of `NAME` from `lookup`. `$$` escapes a
/// literal dollar sign.
pub fn interpolate(text: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find('$') {
        out.push_str(&rest[..pos]);
        let after = &rest[pos + 1..];
        if let Some(tail) = after.strip_prefix('$') {
            out.push('$');
            rest = tail;
        } else if let Some(body) = after.strip_prefix('{') {
            let end = body.find('}').ok_or(ConfigError::UnterminatedVar)?;
            let name = &body[..end];
            out.push_str(&lookup(name).ok_or_else(|| ConfigError::MissingEnv(name.to_string()))?);
            rest = &body[end + 1..];
        } else {
            out.push('$');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_format() -> String {
    "jsonl".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexicaSection {
    pub age: Option<PathBuf>,
    pub gender: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub topics: Option<PathBuf>,
    pub topic_count: Option<usize>,
    pub affect_category: String,
    pub informal_category: String,
    /// Features to score; empty means every feature whose resources are set.
    pub features: Vec<Feature>,
    pub formal_scorer: Option<ExternalScorer>,
}

impl Default for LexicaSection {
    fn default() -> Self {
        Self {
            age: None,
            gender: None,
            dictionary: None,
            topics: None,
            topic_count: None,
            affect_category: "affect".into(),
            informal_category: "informal".into(),
            features: Vec::new(),
            formal_scorer: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct MockSection {
    pub seed: u64,
    pub profile: StyleProfile,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSection {
    pub kind: BackendKind,
    pub http: HttpBackendConfig,
    pub mock: MockSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub workers: usize,
    pub min_success_fraction: f64,
    pub include_truncated: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            workers: 0,
            min_success_fraction: 0.9,
            include_truncated: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSection {
    pub window: (usize, usize),
    pub parallelism: usize,
}

impl Default for ExtractSection {
    fn default() -> Self {
        Self {
            window: TOPIC_WINDOW,
            parallelism: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveSection {
    /// Empty means uniform over the scored features.
    pub weights: BTreeMap<Feature, f64>,
    pub axis_overrides: BTreeMap<String, Vec<Feature>>,
    pub tolerance: f64,
    /// Starting variant per axis; unset axes start at their absent variant.
    pub initial: BTreeMap<String, String>,
}

impl Default for ObjectiveSection {
    fn default() -> Self {
        Self {
            weights: BTreeMap::new(),
            axis_overrides: BTreeMap::new(),
            tolerance: DEFAULT_TOLERANCE,
            initial: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    pub pairs: usize,
    pub replicates: u32,
    pub turns: usize,
    pub max_evaluations: Option<usize>,
}

impl Default for BudgetSection {
    fn default() -> Self {
        Self {
            pairs: 50,
            replicates: 1,
            turns: DEFAULT_TURNS,
            max_evaluations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: CorpusSection,
    #[serde(default)]
    pub lexica: LexicaSection,
    #[serde(default)]
    pub backend: BackendSection,
    #[serde(default)]
    pub prompts: Option<PromptConfig>,
    #[serde(default)]
    pub budget: BudgetSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub extract: ExtractSection,
    #[serde(default)]
    pub objective: ObjectiveSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("output")
}

impl PipelineConfig {
    pub fn from_str_at(text: &str, base: &Path, origin: &Path) -> Result<Self> {
        let text = interpolate(text, |k| std::env::var(k).ok())?;
        let mut cfg: PipelineConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_str_at(&text, base, path)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus.path);
        fix(&mut self.output_dir);
        for p in [
            &mut self.lexica.age,
            &mut self.lexica.gender,
            &mut self.lexica.dictionary,
            &mut self.lexica.topics,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn corpus_format(&self) -> Result<CorpusFormat> {
        self.corpus.format.parse().map_err(|_| {
            ConfigError::Invalid(format!("corpus.format must be jsonl or csv-dir, got `{}`", self.corpus.format))
        })
    }

    /// Checks everything that can be checked without doing work: referenced
    /// files exist, budget and turn count are sane, the objective is
    /// well-formed and covered by the scorers.
    pub fn validate(&self) -> Result<()> {
        self.corpus_format()?;
        let must_exist = |what: &str, p: &Path| {
            if p.exists() {
                Ok(())
            } else {
                Err(ConfigError::MissingFile {
                    what: what.into(),
                    path: p.to_path_buf(),
                })
            }
        };
        must_exist("corpus", &self.corpus.path)?;
        for (what, p) in [
            ("age lexicon", &self.lexica.age),
            ("gender lexicon", &self.lexica.gender),
            ("category dictionary", &self.lexica.dictionary),
            ("topic lexicon", &self.lexica.topics),
        ] {
            if let Some(p) = p {
                must_exist(what, p)?;
            }
        }
        let b = &self.budget;
        if b.turns < 2 || !b.turns.is_multiple_of(2) {
            return Err(ConfigError::Invalid(format!("budget.turns must be even and >= 2, got {}", b.turns)));
        }
        if b.pairs == 0 || b.replicates == 0 {
            return Err(ConfigError::Invalid("budget.pairs and budget.replicates must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.simulation.min_success_fraction) {
            return Err(ConfigError::Invalid("simulation.min_success_fraction must lie in [0, 1]".into()));
        }
        let (s, e) = self.extract.window;
        if s == 0 || e < s {
            return Err(ConfigError::Invalid(format!("extract.window must satisfy 1 <= start <= end, got ({s}, {e})")));
        }
        self.prompt_registry()?;
        let features = self.scored_features();
        let objective = self.objective_for(&features)?;
        for f in objective.features() {
            if !features.contains(&f) {
                return Err(ConfigError::Objective(OptimizeError::UnscoredFeature(f)));
            }
        }
        Ok(())
    }

    /// Configured features, or every feature whose resources are present.
    pub fn scored_features(&self) -> Vec<Feature> {
        if !self.lexica.features.is_empty() {
            return self.lexica.features.clone();
        }
        let l = &self.lexica;
        Feature::ALL
            .into_iter()
            .filter(|f| match f {
                Feature::Age => l.age.is_some(),
                Feature::Gender => l.gender.is_some(),
                Feature::Affect | Feature::Informal => l.dictionary.is_some(),
                Feature::Topic => l.topics.is_some(),
                Feature::Length => true,
                Feature::Formal => l.formal_scorer.is_some(),
            })
            .collect()
    }

    pub fn scorers(&self) -> Result<ScorerSet> {
        let l = &self.lexica;
        let set = ScorerSet {
            features: self.scored_features(),
            age: l.age.as_deref().map(|p| WeightedLexicon::from_csv_path("age", p)).transpose()?,
            gender: l.gender.as_deref().map(|p| WeightedLexicon::from_csv_path("gender", p)).transpose()?,
            dictionary: l.dictionary.as_deref().map(CategoryDictionary::from_dic_path).transpose()?,
            affect_category: l.affect_category.clone(),
            informal_category: l.informal_category.clone(),
            topics: l
                .topics
                .as_deref()
                .map(|p| TopicLexicon::from_csv_path(p, l.topic_count))
                .transpose()?,
            formal: l
                .formal_scorer
                .clone()
                .map(|s| Arc::new(s) as Arc<dyn crate::simulate::TextScorer>),
        };
        set.validate()?;
        Ok(set)
    }

    pub fn prompt_registry(&self) -> Result<PromptRegistry> {
        match &self.prompts {
            Some(p) => Ok(p.build()?),
            None => Ok(PromptRegistry::default()),
        }
    }

    fn objective_for(&self, features: &[Feature]) -> Result<Objective> {
        let o = &self.objective;
        let base = if o.weights.is_empty() {
            Objective::uniform(features)?
        } else {
            Objective::new(o.weights.iter().map(|(f, w)| (*f, *w)))?
        };
        let mut obj = base.with_tolerance(o.tolerance);
        for (axis, fs) in &o.axis_overrides {
            obj = obj.with_override(axis, fs);
        }
        Ok(obj)
    }

    pub fn objective(&self) -> Result<Objective> {
        self.objective_for(&self.scored_features())
    }

    pub fn budget(&self) -> Budget {
        Budget {
            pairs: self.budget.pairs,
            replicates: self.budget.replicates,
            turns: self.budget.turns,
            max_evaluations: self.budget.max_evaluations,
        }
    }

    pub fn extract_options(&self) -> ExtractOptions {
        ExtractOptions {
            window: self.extract.window,
            parallelism: self.extract.parallelism,
        }
    }

    /// Builds the configured backend; `force_mock` overrides the kind.
    pub fn client(&self, force_mock: bool) -> Result<Arc<dyn ChatClient>> {
        if force_mock || self.backend.kind == BackendKind::Mock {
            let m = &self.backend.mock;
            Ok(Arc::new(MockClient::new(m.seed, m.profile.clone())))
        } else {
            Ok(Arc::new(HttpChatClient::new(self.backend.http.clone())?))
        }
    }
}
