//! Pluggable text scorer for features computed outside this crate (the
//! "formal" style model). Line protocol: one `{"text": ...}` JSON object per
//! input line, one `{"score": ...}` object per output line, same order.

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScorerError {
    #[error("scorer unavailable: {0}")]
    Unavailable(String),
    #[error("malformed scorer response on line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("scorer returned {got} scores for {expected} texts")]
    CountMismatch { expected: usize, got: usize },
}

pub trait TextScorer: Send + Sync {
    fn score_texts(&self, texts: &[String]) -> Result<Vec<f64>, ScorerError>;
}

/// Returns the same score for every text.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantScorer(pub f64);

impl TextScorer for ConstantScorer {
    fn score_texts(&self, texts: &[String]) -> Result<Vec<f64>, ScorerError> {
        Ok(vec![self.0; texts.len()])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExternalScorer {
    /// Spawned once per batch; texts on stdin, scores on stdout.
    Command { program: String, #[serde(default)] args: Vec<String> },
    /// One POST per text.
    Http { endpoint: String, #[serde(default = "default_timeout")] timeout_secs: u64 },
}

fn default_timeout() -> u64 {
    30
}

/// Parses one `{"score": x}` line (1-based `line` for messages).
pub fn parse_score_line(text: &str, line: usize) -> Result<f64, ScorerError> {
    let malformed = |message: String| ScorerError::Malformed { line, message };
    let v: Value = serde_json::from_str(text.trim()).map_err(|e| malformed(e.to_string()))?;
    let score = v
        .get("score")
        .and_then(Value::as_f64)
        .ok_or_else(|| malformed("missing numeric `score`".into()))?;
    if !score.is_finite() {
        return Err(malformed("non-finite score".into()));
    }
    Ok(score)
}

/// Parses a full response stream and checks the count.
pub fn parse_score_stream<R: BufRead>(reader: R, expected: usize) -> Result<Vec<f64>, ScorerError> {
    let mut out = Vec::with_capacity(expected);
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ScorerError::Unavailable(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_score_line(&line, i + 1)?);
    }
    if out.len() != expected {
        return Err(ScorerError::CountMismatch {
            expected,
            got: out.len(),
        });
    }
    Ok(out)
}

fn request_lines(texts: &[String]) -> String {
    let mut s = String::new();
    for t in texts {
        s.push_str(&json!({ "text": t }).to_string());
        s.push('\n');
    }
    s
}

impl ExternalScorer {
    fn run_command(&self, program: &str, args: &[String], texts: &[String]) -> Result<Vec<f64>, ScorerError> {
        let unavailable = |e: std::io::Error| ScorerError::Unavailable(format!("{program}: {e}"));
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(unavailable)?;
        let input = request_lines(texts);
        let mut stdin = child.stdin.take().expect("piped stdin");
        // writer thread so a scorer that streams output cannot deadlock us
        let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));
        let stdout = child.stdout.take().expect("piped stdout");
        let parsed = parse_score_stream(BufReader::new(stdout), texts.len());
        let status = child.wait().map_err(unavailable)?;
        let _ = writer.join();
        if !status.success() && parsed.is_err() {
            return Err(ScorerError::Unavailable(format!("{program} exited with {status}")));
        }
        parsed
    }

    fn run_http(&self, endpoint: &str, timeout_secs: u64, texts: &[String]) -> Result<Vec<f64>, ScorerError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(timeout_secs.max(1)))
            .build()
            .map_err(|e| ScorerError::Unavailable(e.to_string()))?;
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let resp = client
                    .post(endpoint)
                    .json(&json!({ "text": t }))
                    .send()
                    .and_then(|r| r.error_for_status())
                    .map_err(|e| ScorerError::Unavailable(e.to_string()))?;
                let body = resp.text().map_err(|e| ScorerError::Unavailable(e.to_string()))?;
                parse_score_line(&body, i + 1)
            })
            .collect()
    }
}

impl TextScorer for ExternalScorer {
    fn score_texts(&self, texts: &[String]) -> Result<Vec<f64>, ScorerError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        match self {
            ExternalScorer::Command { program, args } => self.run_command(program, args, texts),
            ExternalScorer::Http { endpoint, timeout_secs } => self.run_http(endpoint, *timeout_secs, texts),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("text {i}")).collect()
    }

    #[test]
    fn constant_stub() {
        assert_eq!(ConstantScorer(0.5).score_texts(&texts(3)).unwrap(), vec![0.5; 3]);
    }

    #[test]
    fn stream_in_order() {
        let body = "{\"score\": 0.1}\n{\"score\": 0.2}\n{\"score\": 0.3}\n";
        assert_eq!(parse_score_stream(body.as_bytes(), 3).unwrap(), vec![0.1, 0.2, 0.3]);
    }

    #[test]
    fn too_few_lines_is_protocol_error() {
        let body = "{\"score\": 0.1}\n{\"score\": 0.2}\n";
        assert_eq!(
            parse_score_stream(body.as_bytes(), 3),
            Err(ScorerError::CountMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn malformed_line_reports_position() {
        let body = "{\"score\": 0.1}\nnot json\n";
        assert!(matches!(
            parse_score_stream(body.as_bytes(), 2),
            Err(ScorerError::Malformed { line: 2, .. })
        ));
    }

    #[cfg(unix)]
    #[test]
    fn subprocess_round_trip() {
        // replies with a constant score per input line
        let scorer = ExternalScorer::Command {
            program: "sh".into(),
            args: vec!["-c".into(), "while read -r l; do echo '{\"score\": 0.25}'; done".into()],
        };
        assert_eq!(scorer.score_texts(&texts(3)).unwrap(), vec![0.25; 3]);
    }

    #[cfg(unix)]
    #[test]
    fn subprocess_short_output() {
        let scorer = ExternalScorer::Command {
            program: "sh".into(),
            args: vec!["-c".into(), "cat >/dev/null; echo '{\"score\": 1}'; echo '{\"score\": 2}'".into()],
        };
        assert_eq!(
            scorer.score_texts(&texts(3)),
            Err(ScorerError::CountMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn missing_program_is_unavailable() {
        let scorer = ExternalScorer::Command {
            program: "/nonexistent/scorer-binary".into(),
            args: vec![],
        };
        assert!(matches!(scorer.score_texts(&texts(1)), Err(ScorerError::Unavailable(_))));
    }
}
