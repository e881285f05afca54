//! Gap metrics between human (reference) and generated feature samples.
//!
//! Every metric is normalised by the human-side quantity:
//!
//! | kind   | average error            | error of average        | error of dispersion      |
//! |--------|--------------------------|-------------------------|--------------------------|
//! | scalar | mean of `|c−l|/|c|`      | `|C̄−L̄|/|C̄|`            | `|σ_L−σ_C|/σ_C`          |
//! | vector | mean of `‖c−l‖/‖c‖`      | `‖c̄−l̄‖/‖c̄‖`            | `‖Σ_L−Σ_C‖_F/‖Σ_C‖_F`    |

mod report;
mod stats;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::{euclidean_norm, pairwise_sum};

pub use report::{build_report, FeatureReport, MetricReport, ReportMeta, SpeakerPairing};
pub use stats::{
    covariance_diff_norm_dense, covariance_diff_norm_factored, summarize, Summary, SummaryStats,
    VectorSummaryStats,
};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("no samples")]
    Empty,
    #[error("every pair has a zero reference value")]
    AllZeroReference,
    #[error("reference {0} is zero")]
    ZeroReference(&'static str),
    #[error("vector dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("samples mix scalar and vector values")]
    MixedKinds,
}

pub type Result<T> = std::result::Result<T, MetricError>;

/// A per-pair relative error averaged over the pairs with nonzero reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedError {
    pub value: f64,
    pub pairs: usize,
    /// Pairs dropped because the reference was zero.
    pub excluded_zero_reference: usize,
}

fn mean_of(terms: Vec<f64>, excluded: usize) -> Result<PairedError> {
    if terms.is_empty() {
        return Err(MetricError::AllZeroReference);
    }
    Ok(PairedError {
        value: pairwise_sum(&terms) / terms.len() as f64,
        pairs: terms.len(),
        excluded_zero_reference: excluded,
    })
}

pub fn scalar_average_error(pairs: &[(f64, f64)]) -> Result<PairedError> {
    if pairs.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut excluded = 0;
    let mut terms = Vec::with_capacity(pairs.len());
    for &(c, l) in pairs {
        if c == 0.0 {
            excluded += 1;
        } else {
            terms.push((c - l).abs() / c.abs());
        }
    }
    mean_of(terms, excluded)
}

pub fn scalar_error_of_average(c: &SummaryStats, l: &SummaryStats) -> Result<f64> {
    if c.mean == 0.0 {
        return Err(MetricError::ZeroReference("mean"));
    }
    Ok((c.mean - l.mean).abs() / c.mean.abs())
}

pub fn scalar_error_of_dispersion(c: &SummaryStats, l: &SummaryStats) -> Result<f64> {
    if c.std == 0.0 {
        return Err(MetricError::ZeroReference("standard deviation"));
    }
    Ok((l.std - c.std).abs() / c.std)
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    euclidean_norm(&d)
}

pub fn vector_average_error(pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<PairedError> {
    let Some((first, _)) = pairs.first() else {
        return Err(MetricError::Empty);
    };
    let dim = first.len();
    let mut excluded = 0;
    let mut terms = Vec::with_capacity(pairs.len());
    for (c, l) in pairs {
        for v in [c, l] {
            if v.len() != dim {
                return Err(MetricError::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
        }
        let norm_c = euclidean_norm(c);
        if norm_c == 0.0 {
            excluded += 1;
        } else {
            terms.push(diff_norm(c, l) / norm_c);
        }
    }
    mean_of(terms, excluded)
}

pub fn vector_error_of_average(c: &VectorSummaryStats, l: &VectorSummaryStats) -> Result<f64> {
    if c.dim() != l.dim() {
        return Err(MetricError::DimensionMismatch {
            expected: c.dim(),
            found: l.dim(),
        });
    }
    let norm_c = euclidean_norm(&c.mean_vector);
    if norm_c == 0.0 {
        return Err(MetricError::ZeroReference("mean vector"));
    }
    Ok(diff_norm(&c.mean_vector, &l.mean_vector) / norm_c)
}

/// Frobenius-norm relative covariance gap. Uses the Gram-matrix route when
/// the dimension exceeds the combined sample count.
pub fn vector_error_of_dispersion(c: &VectorSummaryStats, l: &VectorSummaryStats) -> Result<f64> {
    if c.dim() != l.dim() {
        return Err(MetricError::DimensionMismatch {
            expected: c.dim(),
            found: l.dim(),
        });
    }
    if c.covariance_norm == 0.0 {
        return Err(MetricError::ZeroReference("covariance"));
    }
    let diff = if c.dim() > c.n + l.n {
        covariance_diff_norm_factored(c, l)
    } else {
        covariance_diff_norm_dense(c, l)
    };
    Ok(diff / c.covariance_norm)
}
