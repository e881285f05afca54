mod common;

use common::oracles;
use persona_dialogue::lexica::{
    score_category, score_weighted, tokenize, topic_distribution, CategoryDictionary, TopicLexicon, WeightedLexicon,
};
use proptest::prelude::*;

fn term() -> impl Strategy<Value = String> {
    "[a-dö]{1,4}"
}

fn text(terms: Vec<String>) -> impl Strategy<Value = (Vec<String>, String)> {
    let piece = prop_oneof![
        3 => proptest::sample::select(terms.clone()),
        1 => "[a-dö]{1,6}",
        1 => "[A-D]{1,3}[a-d]{0,3}",
    ];
    let decorated = (piece, "[.,!?\"'()]{0,2}", "[\"(]{0,1}").prop_map(|(w, post, pre)| format!("{pre}{w}{post}"));
    proptest::collection::vec(decorated, 0..200).prop_map(move |ws| (terms.clone(), ws.join(" ")))
}

fn terms_and_text() -> impl Strategy<Value = (Vec<String>, String)> {
    proptest::collection::btree_set(term(), 1..50)
        .prop_map(|s| s.into_iter().collect::<Vec<_>>())
        .prop_flat_map(text)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tokenizer_matches_oracle(s in "\\PC{0,300}") {
        prop_assert_eq!(tokenize(&s), oracles::tokenize(&s));
    }

    #[test]
    fn weighted_matches_oracle(
        (terms, text) in terms_and_text(),
        intercept in -100.0f64..100.0,
        seed in proptest::collection::vec(-500.0f64..500.0, 50),
    ) {
        let weights: Vec<(String, f64)> = terms.iter().cloned().zip(seed).collect();
        let lex = WeightedLexicon::from_entries("w", intercept, weights.iter().map(|(t, w)| (t.as_str(), *w))).unwrap();
        let tokens = tokenize(&text);
        let got = score_weighted(&tokens, &lex);
        let (want, scale) = oracles::weighted(&tokens, intercept, &weights);
        prop_assert!(oracles::rel_diff(got, want, scale) <= 1e-12, "{} vs {}", got, want);
    }

    #[test]
    fn category_matches_oracle(
        (terms, text) in terms_and_text(),
        wild in proptest::collection::vec(any::<bool>(), 50),
        masks in proptest::collection::vec(1u8..8, 50),
    ) {
        let cats = ["x", "y", "z"];
        let mut dict = CategoryDictionary::new(cats);
        let mut entries = Vec::new();
        for (i, t) in terms.iter().enumerate() {
            let pattern = if wild[i] { format!("{t}*") } else { t.clone() };
            let member: Vec<String> = cats
                .iter()
                .enumerate()
                .filter(|(k, _)| masks[i] & (1 << k) != 0)
                .map(|(_, c)| c.to_string())
                .collect();
            dict.add_pattern(&pattern, member.clone()).unwrap();
            entries.push((pattern, member));
        }
        let tokens = tokenize(&text);
        for cat in cats {
            let hits = oracles::category_hits(&tokens, &entries, cat);
            let want = if tokens.is_empty() { 0.0 } else { hits as f64 / tokens.len() as f64 };
            prop_assert_eq!(score_category(&tokens, &dict, cat).unwrap(), want);
        }
    }

    #[test]
    fn topic_distribution_matches_oracle(
        (terms, text) in terms_and_text(),
        k in 1usize..6,
        rows in proptest::collection::vec((0usize..6, 0.0f64..1.0), 50),
    ) {
        let mut lex = TopicLexicon::new(k);
        let mut entries = Vec::new();
        for (t, (topic, w)) in terms.iter().zip(&rows) {
            let topic = topic % k;
            lex.insert(t, topic, *w).unwrap();
            entries.push((t.clone(), topic, *w));
        }
        let tokens = tokenize(&text);
        let got = topic_distribution(&tokens, &lex);
        let want = oracles::topic_distribution(&tokens, &entries, k);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!(oracles::rel_diff(*g, *w, w.abs()) <= 1e-12, "{:?} vs {:?}", got, want);
        }
        let total: f64 = got.iter().sum();
        prop_assert!(total == 0.0 || (total - 1.0).abs() < 1e-12);
    }
}
