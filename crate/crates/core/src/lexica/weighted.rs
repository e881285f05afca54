//! Weighted lexica: `term,weight` CSV with a reserved `_intercept` row.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use super::{LexiconError, Result};

pub const INTERCEPT_TERM: &str = "_intercept";

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLexicon {
    pub name: String,
    pub intercept: f64,
    entries: HashMap<String, f64>,
}

impl WeightedLexicon {
    pub fn new(name: impl Into<String>, intercept: f64) -> Self {
        Self {
            name: name.into(),
            intercept,
            entries: HashMap::new(),
        }
    }

    /// Builds a lexicon from `(term, weight)` pairs; terms are lowercased.
    pub fn from_entries<I, S>(name: impl Into<String>, intercept: f64, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut lex = Self::new(name, intercept);
        if !intercept.is_finite() {
            return Err(LexiconError::NonFinite(INTERCEPT_TERM.into()));
        }
        for (term, weight) in entries {
            lex.insert(term.as_ref(), weight)?;
        }
        Ok(lex)
    }

    pub fn insert(&mut self, term: &str, weight: f64) -> Result<()> {
        if !weight.is_finite() {
            return Err(LexiconError::NonFinite(term.to_string()));
        }
        self.entries.insert(term.to_lowercase(), weight);
        Ok(())
    }

    pub fn weight(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Parses the CSV form. A leading `term,weight` header is optional; any
    /// extra columns are ignored.
    pub fn from_csv_reader<R: Read>(name: impl Into<String>, reader: R, path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut lex = Self::new(name, 0.0);
        for (i, record) in rdr.records().enumerate() {
            let line = i + 1;
            let record = record.map_err(|e| LexiconError::parse(path, line, e.to_string()))?;
            if record.len() < 2 {
                return Err(LexiconError::parse(path, line, "expected `term,weight`"));
            }
            let term = &record[0];
            if i == 0 && term.eq_ignore_ascii_case("term") {
                continue;
            }
            let weight: f64 = record[1]
                .parse()
                .map_err(|_| LexiconError::parse(path, line, format!("bad weight `{}`", &record[1])))?;
            if term == INTERCEPT_TERM {
                if !weight.is_finite() {
                    return Err(LexiconError::NonFinite(INTERCEPT_TERM.into()));
                }
                lex.intercept = weight;
            } else {
                lex.insert(term, weight)?;
            }
        }
        Ok(lex)
    }

    pub fn from_csv_path(name: impl Into<String>, path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| LexiconError::io(path, e))?;
        Self::from_csv_reader(name, file, path)
    }
}

/// `intercept + Σ_w weight(w) · count(w) / |tokens|`; the bare intercept for
/// an empty document.
pub fn score_weighted(tokens: &[String], lex: &WeightedLexicon) -> f64 {
    if tokens.is_empty() {
        return lex.intercept;
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let n = tokens.len() as f64;
    let mut acc = 0.0;
    for (term, count) in counts {
        if let Some(w) = lex.weight(term) {
            acc += w * count as f64;
        }
    }
    lex.intercept + acc / n
}
