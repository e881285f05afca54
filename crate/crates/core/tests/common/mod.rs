#![allow(dead_code)]

pub mod oracles;

use std::path::{Path, PathBuf};

use persona_dialogue::config::PipelineConfig;
use persona_dialogue::corpus::{filter_complete, load_corpus, Corpus, CorpusFormat};
use persona_dialogue::features::{extract_personas, ExtractOptions, PersonaFeatures};
use persona_dialogue::lexica::ScorerSet;
use persona_dialogue::simulate::{MockClient, StyleProfile};

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn pipeline_config() -> PipelineConfig {
    PipelineConfig::load(&fixture("pipeline.toml")).expect("fixture config loads")
}

pub fn fixture_scorers() -> ScorerSet {
    pipeline_config().scorers().expect("fixture lexica load")
}

/// The 20-conversation synthetic corpus after completeness filtering.
pub fn synthetic_corpus() -> Corpus {
    let raw = load_corpus(&fixture("corpus/synthetic20.jsonl"), CorpusFormat::Jsonl).unwrap();
    filter_complete(&raw)
}

pub fn mock_personas(corpus: &Corpus) -> Vec<PersonaFeatures> {
    let summarizer = MockClient::new(1, StyleProfile::default());
    extract_personas(corpus, &summarizer, ExtractOptions::default()).unwrap()
}
