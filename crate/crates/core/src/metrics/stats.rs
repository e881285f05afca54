use serde::{Deserialize, Serialize};

use super::{MetricError, Result};
use crate::lexica::{FeatureSample, FeatureValue};
use crate::util::pairwise_sum;

/// Population mean and standard deviation of a scalar feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl SummaryStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(MetricError::Empty);
        }
        let n = values.len() as f64;
        let mean = pairwise_sum(values) / n;
        let sq: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
        Ok(Self {
            mean,
            std: (pairwise_sum(&sq) / n).sqrt(),
            n: values.len(),
        })
    }
}

/// Mean vector and population covariance of a vector feature. The covariance
/// is held in factored form (the centred sample matrix) and only
/// materialised on request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorSummaryStats {
    pub mean_vector: Vec<f64>,
    pub n: usize,
    /// `‖Σ‖_F`, kept so a deserialised report still carries the spread.
    pub covariance_norm: f64,
    #[serde(skip)]
    centered: Vec<Vec<f64>>,
}

impl VectorSummaryStats {
    pub fn from_vectors(vectors: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(MetricError::Empty);
        };
        let dim = first.len();
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(MetricError::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        let n = vectors.len();
        let mean_vector: Vec<f64> = (0..dim)
            .map(|j| {
                let col: Vec<f64> = vectors.iter().map(|v| v[j]).collect();
                pairwise_sum(&col) / n as f64
            })
            .collect();
        let centered: Vec<Vec<f64>> = vectors
            .iter()
            .map(|v| v.iter().zip(&mean_vector).map(|(x, m)| x - m).collect())
            .collect();
        let mut stats = Self {
            mean_vector,
            n,
            covariance_norm: 0.0,
            centered,
        };
        stats.covariance_norm = cross_gram_sq(&stats.centered, &stats.centered).sqrt() / n as f64;
        Ok(stats)
    }

    pub fn dim(&self) -> usize {
        self.mean_vector.len()
    }

    pub fn has_samples(&self) -> bool {
        !self.centered.is_empty()
    }

    /// Dense `d × d` population covariance, row-major.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let n = self.n as f64;
        let mut cov = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in i..d {
                let prods: Vec<f64> = self.centered.iter().map(|r| r[i] * r[j]).collect();
                let v = pairwise_sum(&prods) / n;
                cov[i][j] = v;
                cov[j][i] = v;
            }
        }
        cov
    }
}

/// `Σ_ij (A Bᵀ)_ij²` for row-sample matrices A, B.
fn cross_gram_sq(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut sq = Vec::with_capacity(a.len() * b.len());
    for ra in a {
        for rb in b {
            let prods: Vec<f64> = ra.iter().zip(rb).map(|(x, y)| x * y).collect();
            let g = pairwise_sum(&prods);
            sq.push(g * g);
        }
    }
    pairwise_sum(&sq)
}

/// `‖Σ_L − Σ_C‖_F` from Gram matrices, never forming a `d × d` matrix.
pub fn covariance_diff_norm_factored(c: &VectorSummaryStats, l: &VectorSummaryStats) -> f64 {
    let (nc, nl) = (c.n as f64, l.n as f64);
    let cc = cross_gram_sq(&c.centered, &c.centered) / (nc * nc);
    let ll = cross_gram_sq(&l.centered, &l.centered) / (nl * nl);
    let cl = cross_gram_sq(&c.centered, &l.centered) / (nc * nl);
    (cc + ll - 2.0 * cl).max(0.0).sqrt()
}

/// `‖Σ_L − Σ_C‖_F` with both covariances materialised.
pub fn covariance_diff_norm_dense(c: &VectorSummaryStats, l: &VectorSummaryStats) -> f64 {
    let (sc, sl) = (c.covariance(), l.covariance());
    let sq: Vec<f64> = sc
        .iter()
        .zip(&sl)
        .flat_map(|(rc, rl)| rc.iter().zip(rl).map(|(x, y)| (y - x) * (y - x)))
        .collect();
    pairwise_sum(&sq).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Summary {
    Scalar(SummaryStats),
    Vector(VectorSummaryStats),
}

/// Population statistics over homogeneous samples.
pub fn summarize(samples: &[FeatureSample]) -> Result<Summary> {
    let Some(first) = samples.first() else {
        return Err(MetricError::Empty);
    };
    match &first.value {
        FeatureValue::Scalar(_) => {
            let values = samples
                .iter()
                .map(|s| s.value.as_scalar().ok_or(MetricError::MixedKinds))
                .collect::<Result<Vec<f64>>>()?;
            SummaryStats::from_values(&values).map(Summary::Scalar)
        }
        FeatureValue::Vector(_) => {
            let vectors = samples
                .iter()
                .map(|s| s.value.as_vector().map(<[f64]>::to_vec).ok_or(MetricError::MixedKinds))
                .collect::<Result<Vec<Vec<f64>>>>()?;
            VectorSummaryStats::from_vectors(&vectors).map(Summary::Vector)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexica::{Feature, UnitId};

    fn scalar(x: f64) -> FeatureSample {
        FeatureSample {
            unit: UnitId::Speaker { speaker_id: "s".into() },
            feature: Feature::Age,
            value: FeatureValue::Scalar(x),
        }
    }

    #[test]
    fn constant_samples() {
        let s = SummaryStats::from_values(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((s.mean, s.std, s.n), (1.0, 0.0, 3));
    }

    #[test]
    fn population_std() {
        let s = SummaryStats::from_values(&[0.0, 2.0]).unwrap();
        assert_eq!((s.mean, s.std), (1.0, 1.0));
    }

    #[test]
    fn summarize_rejects_empty_and_mixed() {
        assert!(matches!(summarize(&[]), Err(MetricError::Empty)));
        let mut v = scalar(1.0);
        v.value = FeatureValue::Vector(vec![1.0]);
        assert!(matches!(summarize(&[scalar(1.0), v]), Err(MetricError::MixedKinds)));
    }

    #[test]
    fn covariance_of_two_points() {
        // points (0,0) and (2,2): mean (1,1), centred ±(1,1) -> Σ = [[1,1],[1,1]]
        let s = VectorSummaryStats::from_vectors(&[vec![0.0, 0.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(s.covariance(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!((s.covariance_norm - 2.0).abs() < 1e-15);
    }

    #[test]
    fn factored_and_dense_agree() {
        let a = VectorSummaryStats::from_vectors(&[
            vec![0.1, 0.5, 0.4],
            vec![0.3, 0.3, 0.4],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let b = VectorSummaryStats::from_vectors(&[vec![0.2, 0.2, 0.6], vec![0.9, 0.1, 0.0]]).unwrap();
        let f = covariance_diff_norm_factored(&a, &b);
        let d = covariance_diff_norm_dense(&a, &b);
        assert!((f - d).abs() < 1e-12, "{f} vs {d}");
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            VectorSummaryStats::from_vectors(&[vec![1.0], vec![1.0, 2.0]]),
            Err(MetricError::DimensionMismatch { .. })
        ));
    }
}
