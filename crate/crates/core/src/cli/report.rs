//! Plain-text tables from metric reports: one block for scalar features
//! (means, spreads and the three errors per condition) and one for vector
//! features (errors only).

use std::fmt::Write;
use std::path::Path;

use crate::lexica::Level;
use crate::metrics::{FeatureReport, MetricReport, Summary};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("cannot read report {path}: {message}")]
    Read { path: String, message: String },
    #[error("malformed report {path}: {message}")]
    Parse { path: String, message: String },
}

pub fn read_report(path: &Path) -> Result<MetricReport, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|e| ReportError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| ReportError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Keeps only features at `level`.
pub fn filter_level(report: &MetricReport, level: Level) -> MetricReport {
    let mut out = report.clone();
    out.features.retain(|f| f.level == level);
    out.meta.level = Some(level);
    out
}

fn cell(v: Option<f64>, precision: usize) -> String {
    match v {
        Some(x) => format!("{x:.precision$}"),
        None => "-".into(),
    }
}

fn push_row(out: &mut String, cells: &[String], widths: &[usize]) {
    let mut line = String::new();
    for (i, (c, w)) in cells.iter().zip(widths).enumerate() {
        if i < 2 {
            let _ = write!(line, "{c:<w$}  ");
        } else {
            let _ = write!(line, "{c:>w$}  ");
        }
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

fn table(out: &mut String, title: &str, header: &[&str], rows: &[Vec<String>]) {
    if rows.is_empty() {
        return;
    }
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    if !out.is_empty() {
        out.push('\n');
    }
    out.push_str(title);
    out.push('\n');
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    push_row(out, &header, &widths);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    push_row(out, &rule, &widths);
    for r in rows {
        push_row(out, r, &widths);
    }
}

/// Renders reports side by side, one row per (feature, condition), features
/// in first-seen order.
pub fn render_tables(reports: &[(String, MetricReport)], precision: usize) -> String {
    let mut features = Vec::new();
    for (_, r) in reports {
        for f in &r.features {
            if !features.contains(&f.feature) {
                features.push(f.feature);
            }
        }
    }
    let mut scalar_rows = Vec::new();
    let mut vector_rows = Vec::new();
    for feature in features {
        for (name, report) in reports {
            let Some(fr) = report.feature(feature) else { continue };
            let errors = |fr: &FeatureReport| {
                [
                    cell(fr.average_error.map(|a| a.value), precision),
                    cell(fr.error_of_average, precision),
                    cell(fr.error_of_dispersion, precision),
                ]
            };
            match (&fr.human, &fr.generated) {
                (Summary::Scalar(c), Summary::Scalar(l)) => {
                    let mut row = vec![
                        feature.name().to_string(),
                        name.clone(),
                        cell(Some(c.mean), precision),
                        cell(Some(l.mean), precision),
                        cell(Some(c.std), precision),
                        cell(Some(l.std), precision),
                    ];
                    row.extend(errors(fr));
                    scalar_rows.push(row);
                }
                _ => {
                    let mut row = vec![feature.name().to_string(), name.clone()];
                    row.extend(errors(fr));
                    vector_rows.push(row);
                }
            }
        }
    }
    let mut out = String::new();
    table(
        &mut out,
        "Scalar features",
        &[
            "feature",
            "condition",
            "human mean",
            "generated mean",
            "human std",
            "generated std",
            "average error",
            "error of average",
            "error of dispersion",
        ],
        &scalar_rows,
    );
    table(
        &mut out,
        "Vector features",
        &["feature", "condition", "average error", "error of average", "error of dispersion"],
        &vector_rows,
    );
    if out.is_empty() {
        out.push_str("(no features)\n");
    }
    out
}
