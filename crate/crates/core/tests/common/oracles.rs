//! Brute-force reference implementations of the lexicon scorers, plus a
//! generator for random lexica and texts. Everything here works on plain
//! vectors with linear scans so it shares no code path with the library.

use rand::seq::SliceRandom;
use rand::Rng;

pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    let mut pieces: Vec<Vec<char>> = Vec::new();
    let mut current = Vec::new();
    for &c in &chars {
        if c.is_whitespace() {
            if !current.is_empty() {
                pieces.push(std::mem::take(&mut current));
            }
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        pieces.push(current);
    }
    let mut out = Vec::new();
    for p in pieces {
        let mut start = 0;
        while start < p.len() && !p[start].is_alphanumeric() {
            start += 1;
        }
        let mut end = p.len();
        while end > start && !p[end - 1].is_alphanumeric() {
            end -= 1;
        }
        if end > start {
            out.push(p[start..end].iter().collect());
        }
    }
    out
}

pub fn turn_length(text: &str) -> usize {
    tokenize(text).len()
}

/// `(intercept + Σ_tokens weight / n, Σ_tokens |weight| / n + |intercept|)`;
/// the second value is the magnitude scale used for relative comparison.
pub fn weighted(tokens: &[String], intercept: f64, entries: &[(String, f64)]) -> (f64, f64) {
    if tokens.is_empty() {
        return (intercept, intercept.abs());
    }
    let n = tokens.len() as f64;
    let mut sum = 0.0;
    let mut scale = 0.0;
    for t in tokens {
        for (term, w) in entries {
            if term == t {
                sum += w / n;
                scale += w.abs() / n;
            }
        }
    }
    (intercept + sum, intercept.abs() + scale)
}

fn pattern_matches(pattern: &str, token: &str) -> bool {
    match pattern.strip_suffix('*') {
        Some(stem) => token.as_bytes().get(..stem.len()) == Some(stem.as_bytes()),
        None => pattern == token,
    }
}

/// Number of tokens matching at least one pattern listed under `category`.
pub fn category_hits(tokens: &[String], entries: &[(String, Vec<String>)], category: &str) -> usize {
    tokens
        .iter()
        .filter(|t| {
            entries
                .iter()
                .any(|(p, cats)| cats.iter().any(|c| c == category) && pattern_matches(p, t))
        })
        .count()
}

pub fn topic_distribution(tokens: &[String], entries: &[(String, usize, f64)], topic_count: usize) -> Vec<f64> {
    let mut v = vec![0.0; topic_count];
    if tokens.is_empty() {
        return v;
    }
    let n = tokens.len() as f64;
    for t in tokens {
        for (term, topic, w) in entries {
            if term == t {
                v[*topic] += w / n;
            }
        }
    }
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        for x in &mut v {
            *x /= total;
        }
    }
    v
}

const SYLLABLES: &[&str] = &["ka", "lo", "mi", "ru", "te", "sa", "no", "vi", "de", "pa", "ö", "zé"];
const PUNCT: &[&str] = &["", "", "", ".", ",", "!", "?", "\"", "'", "...", "(", ")", "-"];

pub fn random_word<R: Rng>(rng: &mut R) -> String {
    let n = rng.gen_range(1..=3);
    (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

/// A text of up to `max_tokens` whitespace-separated pieces, mostly drawn
/// from `terms`, with random casing, punctuation and spacing.
pub fn random_text<R: Rng>(rng: &mut R, terms: &[String], max_tokens: usize) -> String {
    let n = rng.gen_range(0..=max_tokens);
    let mut out = String::new();
    for i in 0..n {
        let mut w = if !terms.is_empty() && rng.gen_bool(0.6) {
            let t = terms.choose(rng).unwrap().clone();
            // extend some terms so wildcard patterns get exercised
            if rng.gen_bool(0.2) {
                t + &random_word(rng)
            } else {
                t
            }
        } else {
            random_word(rng)
        };
        if rng.gen_bool(0.2) {
            let mut c = w.chars();
            if let Some(first) = c.next() {
                w = first.to_uppercase().collect::<String>() + c.as_str();
            }
        }
        let pre = if rng.gen_bool(0.1) { *PUNCT.choose(rng).unwrap() } else { "" };
        let post = *PUNCT.choose(rng).unwrap();
        if i > 0 {
            out.push_str(if rng.gen_bool(0.1) { "  \t" } else { " " });
        }
        out.push_str(pre);
        out.push_str(&w);
        out.push_str(post);
    }
    out
}

/// Up to `max` distinct random terms.
pub fn random_terms<R: Rng>(rng: &mut R, max: usize) -> Vec<String> {
    let n = rng.gen_range(1..=max);
    let mut terms: Vec<String> = Vec::new();
    while terms.len() < n {
        let w = random_word(rng);
        if !terms.contains(&w) {
            terms.push(w);
        }
    }
    terms
}

/// Relative difference against `scale`, with a floor for values near zero.
pub fn rel_diff(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.abs().max(f64::MIN_POSITIVE)
}
