use std::collections::{HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::*;
use crate::lexica::{Feature, FeatureSample, Level, UnitId};

/// Generated speaker `generated` was simulated from human speaker `human`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeakerPairing {
    pub human: String,
    pub generated: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub variant_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<Level>,
    pub human_speakers: usize,
    pub generated_speakers: usize,
    pub generated_conversations: usize,
    #[serde(default)]
    pub truncated_excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub feature: Feature,
    pub level: Level,
    pub human: Summary,
    pub generated: Summary,
    pub average_error: Option<PairedError>,
    pub error_of_average: Option<f64>,
    pub error_of_dispersion: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub meta: ReportMeta,
    pub features: Vec<FeatureReport>,
}

impl MetricReport {
    pub fn feature(&self, f: Feature) -> Option<&FeatureReport> {
        self.features.iter().find(|r| r.feature == f)
    }

    /// Flat `feature,level,metric,value` export.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["feature", "level", "metric", "value"])?;
        for r in &self.features {
            let level = match r.level {
                Level::Turn => "turn",
                Level::Speaker => "speaker",
            };
            let mut rows: Vec<(&str, f64)> = Vec::new();
            match (&r.human, &r.generated) {
                (Summary::Scalar(c), Summary::Scalar(l)) => {
                    rows.extend([
                        ("human_mean", c.mean),
                        ("generated_mean", l.mean),
                        ("human_std", c.std),
                        ("generated_std", l.std),
                    ]);
                }
                (Summary::Vector(c), Summary::Vector(l)) => {
                    rows.extend([
                        ("human_mean_norm", euclidean_norm(&c.mean_vector)),
                        ("generated_mean_norm", euclidean_norm(&l.mean_vector)),
                        ("human_covariance_norm", c.covariance_norm),
                        ("generated_covariance_norm", l.covariance_norm),
                    ]);
                }
                _ => {}
            }
            if let Some(a) = r.average_error {
                rows.push(("average_error", a.value));
            }
            if let Some(v) = r.error_of_average {
                rows.push(("error_of_average", v));
            }
            if let Some(v) = r.error_of_dispersion {
                rows.push(("error_of_dispersion", v));
            }
            for (metric, value) in rows {
                w.write_record([r.feature.name(), level, metric, &value.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn owner(unit: &UnitId) -> &str {
    match unit {
        UnitId::Speaker { speaker_id } | UnitId::Turn { speaker_id, .. } => speaker_id,
    }
}

fn ok_or_note<T>(r: Result<T>, what: &str, notes: &mut Vec<String>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("{what} undefined: {e}"));
            None
        }
    }
}

/// Compares human and generated samples for each requested feature.
///
/// Speaker-level features use the pairing for average error (one pair per
/// generated speaker). Turn-level features report only the error of
/// average; their dispersion and per-pair error are left undefined.
pub fn build_report(
    human: &[FeatureSample],
    generated: &[FeatureSample],
    pairing: &[SpeakerPairing],
    features: &[Feature],
    meta: ReportMeta,
) -> Result<MetricReport> {
    let mut human_ids: Vec<&str> = Vec::new();
    let mut seen = HashSet::new();
    for p in pairing {
        if seen.insert(p.human.as_str()) {
            human_ids.push(&p.human);
        }
    }
    let generated_ids: HashSet<&str> = pairing.iter().map(|p| p.generated.as_str()).collect();
    let human_set: HashSet<&str> = human_ids.iter().copied().collect();

    let mut out = Vec::new();
    for &feature in features {
        let of = |samples: &'_ [FeatureSample], keep: &HashSet<&str>| -> Vec<FeatureSample> {
            samples
                .iter()
                .filter(|s| s.feature == feature && keep.contains(owner(&s.unit)))
                .cloned()
                .collect()
        };
        let hs = of(human, &human_set);
        let gs = of(generated, &generated_ids);
        let c = summarize(&hs)?;
        let l = summarize(&gs)?;
        let mut notes = Vec::new();

        let (average_error, error_of_average, error_of_dispersion) = match feature.level() {
            Level::Turn => {
                let (Summary::Scalar(cs), Summary::Scalar(ls)) = (&c, &l) else {
                    return Err(MetricError::MixedKinds);
                };
                (
                    None,
                    ok_or_note(scalar_error_of_average(cs, ls), "error of average", &mut notes),
                    None,
                )
            }
            Level::Speaker => {
                let by_h: HashMap<&str, &FeatureSample> = hs.iter().map(|s| (owner(&s.unit), s)).collect();
                let by_g: HashMap<&str, &FeatureSample> = gs.iter().map(|s| (owner(&s.unit), s)).collect();
                let matched: Vec<(&FeatureSample, &FeatureSample)> = pairing
                    .iter()
                    .filter_map(|p| Some((*by_h.get(p.human.as_str())?, *by_g.get(p.generated.as_str())?)))
                    .collect();
                match (&c, &l) {
                    (Summary::Scalar(cs), Summary::Scalar(ls)) => {
                        let pairs: Vec<(f64, f64)> = matched
                            .iter()
                            .filter_map(|(h, g)| Some((h.value.as_scalar()?, g.value.as_scalar()?)))
                            .collect();
                        (
                            ok_or_note(scalar_average_error(&pairs), "average error", &mut notes),
                            ok_or_note(scalar_error_of_average(cs, ls), "error of average", &mut notes),
                            ok_or_note(scalar_error_of_dispersion(cs, ls), "error of dispersion", &mut notes),
                        )
                    }
                    (Summary::Vector(cs), Summary::Vector(ls)) => {
                        let pairs: Vec<(Vec<f64>, Vec<f64>)> = matched
                            .iter()
                            .filter_map(|(h, g)| {
                                Some((h.value.as_vector()?.to_vec(), g.value.as_vector()?.to_vec()))
                            })
                            .collect();
                        (
                            ok_or_note(vector_average_error(&pairs), "average error", &mut notes),
                            ok_or_note(vector_error_of_average(cs, ls), "error of average", &mut notes),
                            ok_or_note(vector_error_of_dispersion(cs, ls), "error of dispersion", &mut notes),
                        )
                    }
                    _ => return Err(MetricError::MixedKinds),
                }
            }
        };
        out.push(FeatureReport {
            feature,
            level: feature.level(),
            human: c,
            generated: l,
            average_error,
            error_of_average,
            error_of_dispersion,
            notes,
        });
    }
    Ok(MetricReport { meta, features: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexica::FeatureValue;

    fn speaker(id: &str, f: Feature, x: f64) -> FeatureSample {
        FeatureSample {
            unit: UnitId::Speaker { speaker_id: id.into() },
            feature: f,
            value: FeatureValue::Scalar(x),
        }
    }

    fn turn(id: &str, i: u32, x: f64) -> FeatureSample {
        FeatureSample {
            unit: UnitId::Turn {
                conversation_id: "c".into(),
                speaker_id: id.into(),
                index: i,
            },
            feature: Feature::Length,
            value: FeatureValue::Scalar(x),
        }
    }

    fn pair(h: &str, g: &str) -> SpeakerPairing {
        SpeakerPairing {
            human: h.into(),
            generated: g.into(),
        }
    }

    #[test]
    fn speaker_level_scalar_report() {
        let human = vec![speaker("h1", Feature::Age, 20.0), speaker("h2", Feature::Age, 40.0)];
        let generated = vec![speaker("g1", Feature::Age, 30.0), speaker("g2", Feature::Age, 40.0)];
        let r = build_report(
            &human,
            &generated,
            &[pair("h1", "g1"), pair("h2", "g2")],
            &[Feature::Age],
            ReportMeta::default(),
        )
        .unwrap();
        let f = r.feature(Feature::Age).unwrap();
        // pairs: 10/20 and 0/40 -> 0.25 ; means 30 vs 35 -> 1/6 ; std 10 vs 5 -> 0.5
        assert_eq!(f.average_error.unwrap().value, 0.25);
        assert!((f.error_of_average.unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(f.error_of_dispersion.unwrap(), 0.5);
    }

    #[test]
    fn turn_level_reports_only_error_of_average() {
        let human = vec![turn("h1", 0, 4.0), turn("h1", 1, 8.0)];
        let generated = vec![turn("g1", 0, 9.0)];
        let r = build_report(&human, &generated, &[pair("h1", "g1")], &[Feature::Length], ReportMeta::default())
            .unwrap();
        let f = &r.features[0];
        assert_eq!(f.level, Level::Turn);
        assert_eq!(f.error_of_average, Some(0.5));
        assert!(f.average_error.is_none() && f.error_of_dispersion.is_none());
    }

    #[test]
    fn unpaired_speakers_are_ignored() {
        let human = vec![speaker("h1", Feature::Age, 20.0), speaker("other", Feature::Age, 90.0)];
        let generated = vec![speaker("g1", Feature::Age, 20.0)];
        let r = build_report(&human, &generated, &[pair("h1", "g1")], &[Feature::Age], ReportMeta::default())
            .unwrap();
        assert_eq!(r.features[0].error_of_average, Some(0.0));
        assert!(r.features[0].error_of_dispersion.is_none());
        assert_eq!(r.features[0].notes.len(), 1);
    }

    #[test]
    fn csv_export_rows() {
        let human = vec![turn("h1", 0, 4.0)];
        let generated = vec![turn("g1", 0, 6.0)];
        let r = build_report(&human, &generated, &[pair("h1", "g1")], &[Feature::Length], ReportMeta::default())
            .unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("feature,level,metric,value\n"));
        assert!(text.contains("length,turn,error_of_average,0.5\n"), "{text}");
    }
}
