//! LIWC-style category dictionaries.
//!
//! The `.dic` layout is a `%`-fenced header of `id<TAB>name` lines followed
//! by `pattern<TAB>id[<TAB>id...]` entries. A trailing `*` makes the pattern
//! a prefix match.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use super::{LexiconError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Literal(String),
    Prefix(String),
}

impl Pattern {
    pub fn parse(raw: &str) -> Self {
        let raw = raw.to_lowercase();
        match raw.strip_suffix('*') {
            Some(stem) => Pattern::Prefix(stem.to_string()),
            None => Pattern::Literal(raw),
        }
    }

    pub fn matches(&self, token: &str) -> bool {
        match self {
            Pattern::Literal(w) => w == token,
            Pattern::Prefix(stem) => token.starts_with(stem.as_str()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CategoryDictionary {
    categories: BTreeSet<String>,
    patterns: Vec<(Pattern, BTreeSet<String>)>,
    literal: HashMap<String, Vec<usize>>,
    prefix: HashMap<String, Vec<usize>>,
}

impl CategoryDictionary {
    pub fn new<I, S>(categories: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            categories: categories.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn categories(&self) -> &BTreeSet<String> {
        &self.categories
    }

    pub fn patterns(&self) -> &[(Pattern, BTreeSet<String>)] {
        &self.patterns
    }

    pub fn has_category(&self, name: &str) -> bool {
        self.categories.contains(name)
    }

    /// Adds a pattern. Every category must already be declared and at least
    /// one must be given.
    pub fn add_pattern<I, S>(&mut self, pattern: &str, categories: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let cats: BTreeSet<String> = categories.into_iter().map(Into::into).collect();
        if cats.is_empty() {
            return Err(LexiconError::EmptyPattern(pattern.to_string()));
        }
        if let Some(unknown) = cats.iter().find(|c| !self.categories.contains(*c)) {
            return Err(LexiconError::UnknownCategory(unknown.clone()));
        }
        let pat = Pattern::parse(pattern);
        let slot = self.patterns.len();
        match &pat {
            Pattern::Literal(w) => self.literal.entry(w.clone()).or_default().push(slot),
            Pattern::Prefix(s) => self.prefix.entry(s.clone()).or_default().push(slot),
        }
        self.patterns.push((pat, cats));
        Ok(())
    }

    /// All categories a token falls into.
    pub fn categories_of(&self, token: &str) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        let mut collect = |slots: &Vec<usize>| {
            for &i in slots {
                out.extend(self.patterns[i].1.iter().map(String::as_str));
            }
        };
        if let Some(slots) = self.literal.get(token) {
            collect(slots);
        }
        if let Some(slots) = self.prefix.get("") {
            collect(slots);
        }
        for (end, _) in token.char_indices().skip(1).chain([(token.len(), ' ')]) {
            if let Some(slots) = self.prefix.get(&token[..end]) {
                collect(slots);
            }
        }
        out
    }

    pub fn token_in_category(&self, token: &str, category: &str) -> bool {
        self.categories_of(token).contains(category)
    }

    pub fn parse_dic(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().peekable();
        // skip leading blank lines, then require the opening fence
        while let Some((_, l)) = lines.peek() {
            if l.trim().is_empty() {
                lines.next();
            } else {
                break;
            }
        }
        match lines.next() {
            Some((_, l)) if l.trim() == "%" => {}
            Some((i, _)) => return Err(LexiconError::parse(path, i + 1, "expected `%` header fence")),
            None => return Err(LexiconError::parse(path, 0, "empty dictionary")),
        }
        let mut ids: HashMap<String, String> = HashMap::new();
        let mut closed = false;
        for (i, line) in lines.by_ref() {
            let l = line.trim();
            if l == "%" {
                closed = true;
                break;
            }
            if l.is_empty() {
                continue;
            }
            let mut parts = l.split_whitespace();
            let (Some(id), Some(name)) = (parts.next(), parts.next()) else {
                return Err(LexiconError::parse(path, i + 1, "expected `id<TAB>name`"));
            };
            ids.insert(id.to_string(), name.to_string());
        }
        if !closed {
            return Err(LexiconError::parse(path, 0, "unterminated `%` header"));
        }
        let mut dict = CategoryDictionary::new(ids.values().cloned());
        for (i, line) in lines {
            let l = line.trim();
            if l.is_empty() {
                continue;
            }
            let mut fields = l.split('\t').map(str::trim).filter(|f| !f.is_empty());
            let pattern = fields.next().unwrap_or_default();
            if pattern.contains(' ') {
                return Err(LexiconError::parse(
                    path,
                    i + 1,
                    format!("multiword pattern `{pattern}` not supported"),
                ));
            }
            let mut cats = Vec::new();
            for field in fields {
                for id in field.split_whitespace() {
                    let name = ids.get(id).ok_or_else(|| {
                        LexiconError::parse(path, i + 1, format!("undeclared category id `{id}`"))
                    })?;
                    cats.push(name.clone());
                }
            }
            if cats.is_empty() {
                return Err(LexiconError::parse(path, i + 1, format!("`{pattern}` has no categories")));
            }
            dict.add_pattern(pattern, cats)?;
        }
        Ok(dict)
    }

    pub fn from_dic_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LexiconError::io(path, e))?;
        Self::parse_dic(&text, path)
    }
}

/// Share of tokens matching any pattern of `category`; 0 for no tokens.
pub fn score_category(tokens: &[String], dict: &CategoryDictionary, category: &str) -> Result<f64> {
    if !dict.has_category(category) {
        return Err(LexiconError::UnknownCategory(category.to_string()));
    }
    if tokens.is_empty() {
        return Ok(0.0);
    }
    let hits = tokens
        .iter()
        .filter(|t| dict.token_in_category(t, category))
        .count();
    Ok(hits as f64 / tokens.len() as f64)
}
