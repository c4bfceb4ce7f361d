//! Dataset manifests, WER filtering, seeded splitting and the synthetic task.

mod synth;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::rng;
use crate::texteval::{normalize_text, wer};

pub use synth::{synth_generate, target_len, SynthConfig, SynthDataset, SynthRule, Teacher};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ManifestRecord {
    pub id: String,
    pub transcript: String,
    pub article_body: String,
    pub summary: String,
    pub feature_path: Option<String>,
    pub embedding_path: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CorpusError {
    MissingHypotheses(Vec<String>),
    DuplicateId(String),
    EmptyReference(String),
    BadRatios(String),
    TooFew(usize),
    Config(String),
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingHypotheses(ids) => write!(f, "no hypothesis for: {}", ids.join(", ")),
            Self::DuplicateId(id) => write!(f, "duplicate record id {id}"),
            Self::EmptyReference(id) => write!(f, "record {id} has an empty article body"),
            Self::BadRatios(m) => write!(f, "bad split ratios: {m}"),
            Self::TooFew(n) => write!(f, "need at least 3 records to split, got {n}"),
            Self::Config(m) => write!(f, "{m}"),
        }
    }
}

impl core::error::Error for CorpusError {}

pub fn check_unique_ids(records: &[ManifestRecord]) -> Result<(), CorpusError> {
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(CorpusError::DuplicateId(r.id.clone()));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterReport {
    pub kept: Vec<ManifestRecord>,
    /// WER of every input record, in input order.
    pub wer: Vec<(String, f64)>,
}

/// Keeps records whose article body and ASR hypothesis are within
/// `threshold` WER of each other (inclusive).
pub fn filter_by_wer(
    records: &[ManifestRecord],
    hypotheses: &BTreeMap<String, String>,
    threshold: f64,
) -> Result<FilterReport, CorpusError> {
    check_unique_ids(records)?;
    let missing: Vec<String> = records
        .iter()
        .filter(|r| !hypotheses.contains_key(&r.id))
        .map(|r| r.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(CorpusError::MissingHypotheses(missing));
    }
    let mut report = FilterReport {
        kept: Vec::new(),
        wer: Vec::with_capacity(records.len()),
    };
    for r in records {
        let reference = normalize_text(&r.article_body);
        let w = wer(&reference, &normalize_text(&hypotheses[&r.id]))
            .map_err(|_| CorpusError::EmptyReference(r.id.clone()))?;
        if w <= threshold {
            report.kept.push(r.clone());
        }
        report.wer.push((r.id.clone(), w));
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    /// Train, dev, test.
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.ratios.iter().any(|r| !(*r > 0.0)) {
            return Err(CorpusError::BadRatios(
                "every ratio must be positive".into(),
            ));
        }
        let total: f64 = self.ratios.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(CorpusError::BadRatios(alloc::format!(
                "ratios sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    /// `(train, dev, test)` sizes: dev and test are rounded down and the
    /// remainder goes to train. A 1e-9 slack absorbs float error in `n·r`.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let cut = |r: f64| libm::floor(n as f64 * r + 1e-9) as usize;
        let dev = cut(self.ratios[1]);
        let test = cut(self.ratios[2]);
        (n - dev - test, dev, test)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Splits {
    pub train: Vec<ManifestRecord>,
    pub dev: Vec<ManifestRecord>,
    pub test: Vec<ManifestRecord>,
}

/// Seeded shuffle followed by contiguous train/dev/test cuts.
pub fn split(records: &[ManifestRecord], spec: &SplitSpec) -> Result<Splits, CorpusError> {
    spec.validate()?;
    check_unique_ids(records)?;
    if records.len() < 3 {
        return Err(CorpusError::TooFew(records.len()));
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    rng::shuffle(&mut rng::seeded(spec.seed), &mut order);
    let (n_train, n_dev, _) = spec.sizes(records.len());
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect();
    Ok(Splits {
        train: pick(&order[..n_train]),
        dev: pick(&order[n_train..n_train + n_dev]),
        test: pick(&order[n_train + n_dev..]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    fn record(id: &str, body: &str) -> ManifestRecord {
        ManifestRecord {
            id: id.to_string(),
            article_body: body.to_string(),
            ..Default::default()
        }
    }

    fn hyps(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn filter_keeps_boundary_and_drops_high_wer() {
        // 20 reference words, 9 substitutions: WER exactly 0.45.
        let body: Vec<String> = (0..20).map(|i| format!("w{i}")).collect();
        let mut hyp = body.clone();
        for w in hyp.iter_mut().take(9) {
            *w = "x".into();
        }
        let records = [
            record("same", "one two"),
            record("edge", &body.join(" ")),
            record("bad", "a b c"),
        ];
        let h = hyps(&[
            ("same", "One, two!"),
            ("edge", &hyp.join(" ")),
            ("bad", "a x y"),
        ]);
        let report = filter_by_wer(&records, &h, 0.45).unwrap();
        let kept: Vec<&str> = report.kept.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(kept, ["same", "edge"]);
        assert_eq!(report.wer[1].1, 0.45);
        assert_eq!(report.wer[2].1, 2.0 / 3.0);
    }

    #[test]
    fn filter_reports_missing_hypotheses() {
        let records = [record("a", "x"), record("b", "y"), record("c", "z")];
        let err = filter_by_wer(&records, &hyps(&[("b", "y")]), 0.5).unwrap_err();
        assert_eq!(
            err,
            CorpusError::MissingHypotheses(vec!["a".into(), "c".into()])
        );
    }

    #[test]
    fn split_sizes() {
        let spec = SplitSpec {
            ratios: [0.8, 0.1, 0.1],
            seed: 1,
        };
        assert_eq!(spec.sizes(10), (8, 1, 1));
        let n = 16_725.0;
        let corpus = SplitSpec {
            ratios: [13_380.0 / n, 1_672.0 / n, 1_673.0 / n],
            seed: 0,
        };
        assert_eq!(corpus.sizes(16_725), (13_380, 1_672, 1_673));
    }

    #[test]
    fn split_is_a_deterministic_partition() {
        let records: Vec<ManifestRecord> = (0..25).map(|i| record(&format!("r{i}"), "x")).collect();
        let spec = SplitSpec {
            ratios: [0.6, 0.2, 0.2],
            seed: 42,
        };
        let a = split(&records, &spec).unwrap();
        assert_eq!(a, split(&records, &spec).unwrap());
        let mut ids: Vec<String> = a
            .train
            .iter()
            .chain(&a.dev)
            .chain(&a.test)
            .map(|r| r.id.clone())
            .collect();
        ids.sort();
        let mut want: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
        want.sort();
        assert_eq!(ids, want);
        assert!(split(&records[..2], &spec).is_err());
    }

    #[test]
    fn split_rejects_bad_ratios_and_duplicates() {
        let records = vec![record("a", "x"), record("a", "y"), record("b", "z")];
        let ok = SplitSpec {
            ratios: [0.5, 0.25, 0.25],
            seed: 0,
        };
        assert_eq!(
            split(&records, &ok),
            Err(CorpusError::DuplicateId("a".into()))
        );
        let bad = SplitSpec {
            ratios: [0.5, 0.5, 0.5],
            seed: 0,
        };
        assert!(bad.validate().is_err());
    }
}
