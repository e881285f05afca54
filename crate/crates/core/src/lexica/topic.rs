//! Pretrained topic lexica (`term,topic_id,weight` with weight = p(topic|word)).

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use super::{LexiconError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TopicLexicon {
    topic_count: usize,
    weights: HashMap<String, Vec<(usize, f64)>>,
}

impl TopicLexicon {
    pub fn new(topic_count: usize) -> Self {
        Self {
            topic_count,
            weights: HashMap::new(),
        }
    }

    pub fn topic_count(&self) -> usize {
        self.topic_count
    }

    pub fn insert(&mut self, term: &str, topic: usize, weight: f64) -> Result<()> {
        if topic >= self.topic_count {
            return Err(LexiconError::TopicOutOfRange {
                topic,
                topic_count: self.topic_count,
            });
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(LexiconError::NonFinite(format!("{term}/{topic}")));
        }
        let row = self.weights.entry(term.to_lowercase()).or_default();
        match row.iter_mut().find(|(t, _)| *t == topic) {
            Some(slot) => slot.1 = weight,
            None => {
                row.push((topic, weight));
                row.sort_by_key(|(t, _)| *t);
            }
        }
        Ok(())
    }

    pub fn topics_of(&self, token: &str) -> Option<&[(usize, f64)]> {
        self.weights.get(token).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Parses the CSV form. `topic_count` defaults to `max(topic_id) + 1`.
    pub fn from_csv_reader<R: Read>(reader: R, path: &Path, topic_count: Option<usize>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let line = i + 1;
            let record = record.map_err(|e| LexiconError::parse(path, line, e.to_string()))?;
            if record.len() != 3 {
                return Err(LexiconError::parse(path, line, "expected `term,topic_id,weight`"));
            }
            if i == 0 && record[0].eq_ignore_ascii_case("term") {
                continue;
            }
            let topic: usize = record[1]
                .parse()
                .map_err(|_| LexiconError::parse(path, line, format!("bad topic id `{}`", &record[1])))?;
            let weight: f64 = record[2]
                .parse()
                .map_err(|_| LexiconError::parse(path, line, format!("bad weight `{}`", &record[2])))?;
            rows.push((record[0].to_string(), topic, weight, line));
        }
        let inferred = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
        let count = topic_count.unwrap_or(inferred);
        let mut lex = Self::new(count);
        for (term, topic, weight, line) in rows {
            lex.insert(&term, topic, weight)
                .map_err(|e| LexiconError::parse(path, line, e.to_string()))?;
        }
        Ok(lex)
    }

    pub fn from_csv_path(path: &Path, topic_count: Option<usize>) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| LexiconError::io(path, e))?;
        Self::from_csv_reader(file, path, topic_count)
    }
}

/// `v[t] = Σ_w relfreq(w) · p(t|w)`, L1-normalised. Documents with no
/// in-lexicon token get the zero vector.
pub fn topic_distribution(tokens: &[String], topics: &TopicLexicon) -> Vec<f64> {
    let mut v = vec![0.0; topics.topic_count()];
    if tokens.is_empty() {
        return v;
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let n = tokens.len() as f64;
    for (term, count) in counts {
        if let Some(row) = topics.topics_of(term) {
            let rel = count as f64 / n;
            for &(topic, p) in row {
                v[topic] += rel * p;
            }
        }
    }
    let total: f64 = crate::util::pairwise_sum(&v);
    if total > 0.0 {
        for x in &mut v {
            *x /= total;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn out_of_lexicon_is_zero_vector() {
        let mut lex = TopicLexicon::new(3);
        lex.insert("food", 0, 1.0).unwrap();
        assert_eq!(topic_distribution(&toks(&["car"]), &lex), vec![0.0; 3]);
        assert_eq!(topic_distribution(&[], &lex), vec![0.0; 3]);
    }

    #[test]
    fn single_word_one_hot() {
        let mut lex = TopicLexicon::new(3);
        lex.insert("food", 1, 1.0).unwrap();
        assert_eq!(topic_distribution(&toks(&["food"]), &lex), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn hand_computed_three_topics() {
        // doc: pizza pizza game the rain (5 tokens)
        // pizza: t0 .8, t1 .2 ; game: t1 .6, t2 .4 ; rain: t2 1.0
        // raw: t0 = .4*.8 = .32 ; t1 = .4*.2 + .2*.6 = .2 ; t2 = .2*.4 + .2 = .28
        // total .8 -> [.4, .25, .35]
        let mut lex = TopicLexicon::new(3);
        lex.insert("pizza", 0, 0.8).unwrap();
        lex.insert("pizza", 1, 0.2).unwrap();
        lex.insert("game", 1, 0.6).unwrap();
        lex.insert("game", 2, 0.4).unwrap();
        lex.insert("rain", 2, 1.0).unwrap();
        let v = topic_distribution(&toks(&["pizza", "pizza", "game", "the", "rain"]), &lex);
        for (got, want) in v.iter().zip([0.4, 0.25, 0.35]) {
            assert!((got - want).abs() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn csv_topic_count_inferred_or_declared() {
        let src = "term,topic_id,weight\nfood,0,0.5\nfood,4,0.5\n";
        let lex = TopicLexicon::from_csv_reader(src.as_bytes(), Path::new("t"), None).unwrap();
        assert_eq!(lex.topic_count(), 5);
        let lex = TopicLexicon::from_csv_reader(src.as_bytes(), Path::new("t"), Some(2000)).unwrap();
        assert_eq!(lex.topic_count(), 2000);
        assert!(TopicLexicon::from_csv_reader(src.as_bytes(), Path::new("t"), Some(3)).is_err());
    }

    #[test]
    fn negative_weight_rejected() {
        let mut lex = TopicLexicon::new(2);
        assert!(lex.insert("x", 0, -0.1).is_err());
    }
}
