mod common;

use persona_dialogue::corpus::{
    filter_complete, filter_complete_with_report, load_corpus, read_jsonl, write_jsonl, CorpusFormat, DropReason,
    RecordFlag,
};
use persona_dialogue::lexica::{score_category, tokenize, CategoryDictionary, TopicLexicon, WeightedLexicon};

#[test]
fn two_conversation_fixture_has_four_speakers() {
    let corpus = load_corpus(&common::fixture("corpus/two.jsonl"), CorpusFormat::Jsonl).unwrap();
    assert_eq!(corpus.conversations.len(), 2);
    assert_eq!(corpus.speakers.len(), 4);
    for conv in &corpus.conversations {
        assert_eq!(conv.participants.len(), 2);
        assert_eq!(conv.turns.len(), 6);
    }
    assert_eq!(filter_complete(&corpus), corpus);
}

#[test]
fn defective_records_are_dropped_with_reasons() {
    let raw = load_corpus(&common::fixture("corpus/ten_with_defects.jsonl"), CorpusFormat::Jsonl).unwrap();
    assert_eq!(raw.conversations.len(), 10);
    let (kept, report) = filter_complete_with_report(&raw);
    assert_eq!(kept.conversations.len(), 7);
    assert_eq!(report.conversations_retained, 7);
    assert_eq!(report.speakers_retained, 14);
    assert_eq!(report.dropped["c01"], DropReason::IncompleteSpeaker);
    assert_eq!(report.dropped["c04"], DropReason::IncompleteSpeaker);
    assert_eq!(report.dropped["c07"], DropReason::EmptyTranscript);
    assert!(raw.speakers["s04b"].flags().contains(&RecordFlag::AffectOutOfRange));
    // filtering twice changes nothing
    assert_eq!(filter_complete(&kept), kept);
}

#[test]
fn csv_directory_layout_loads() {
    let corpus = load_corpus(&common::fixture("corpus/csv_dir"), CorpusFormat::CsvDir).unwrap();
    assert_eq!(corpus.conversations.len(), 2);
    assert_eq!(corpus.speakers.len(), 4);
    let missing: Vec<_> = corpus.speakers.values().filter(|s| s.age.is_none()).collect();
    assert_eq!(missing.len(), 1);
    assert_eq!(filter_complete(&corpus).conversations.len(), 1);
    for conv in &corpus.conversations {
        let idx: Vec<u32> = conv.turns.iter().map(|t| t.index).collect();
        assert_eq!(idx, vec![0, 1, 2, 3]);
    }
}

#[test]
fn jsonl_round_trip_is_byte_identical_for_every_fixture() {
    for name in ["synthetic20", "two", "ten_with_defects"] {
        let path = common::fixture(&format!("corpus/{name}.jsonl"));
        let original = std::fs::read(&path).unwrap();
        let corpus = read_jsonl(original.as_slice(), &path).unwrap();
        let mut written = Vec::new();
        write_jsonl(&corpus, &mut written).unwrap();
        assert_eq!(String::from_utf8(written).unwrap(), String::from_utf8(original).unwrap(), "{name}");
    }
}

#[test]
fn csv_corpus_written_as_jsonl_reads_back_equal() {
    let corpus = load_corpus(&common::fixture("corpus/csv_dir"), CorpusFormat::CsvDir).unwrap();
    let mut bytes = Vec::new();
    write_jsonl(&corpus, &mut bytes).unwrap();
    let back = read_jsonl(bytes.as_slice(), std::path::Path::new("mem")).unwrap();
    assert_eq!(back, corpus);
}

#[test]
fn fixture_dictionary_hand_counts() {
    let dict = CategoryDictionary::from_dic_path(&common::fixture("lexica/dictionary.dic")).unwrap();
    assert_eq!(dict.categories().len(), 7);
    let tokens = tokenize("Stressful day, haha. I was so stressed and sad");
    // stressful stressed: stress*; haha: haha*; was: verb/focuspast; sad
    assert_eq!(tokens.len(), 9);
    assert_eq!(score_category(&tokens, &dict, "negemo").unwrap(), 3.0 / 9.0);
    assert_eq!(score_category(&tokens, &dict, "sadness").unwrap(), 1.0 / 9.0);
    assert_eq!(score_category(&tokens, &dict, "informal").unwrap(), 1.0 / 9.0);
    assert_eq!(score_category(&tokens, &dict, "focuspast").unwrap(), 1.0 / 9.0);
    assert!(score_category(&tokens, &dict, "nonexistent").is_err());
}

#[test]
fn fixture_lexica_load() {
    let age = WeightedLexicon::from_csv_path("age", &common::fixture("lexica/age.csv")).unwrap();
    let gender = WeightedLexicon::from_csv_path("gender", &common::fixture("lexica/gender.csv")).unwrap();
    assert!(age.weight("mortgage").unwrap() > 0.0);
    assert!(age.weight("dorm").unwrap() < 0.0);
    assert!(gender.weight("sister").unwrap() > 0.0);
    assert!(gender.weight("truck").unwrap() < 0.0);
    let topics = TopicLexicon::from_csv_path(&common::fixture("lexica/topics.csv"), None).unwrap();
    assert_eq!(topics.topic_count(), 6);
    assert!(topics.topics_of("pasta").is_some());
}
