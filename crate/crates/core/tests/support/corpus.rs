//! Random corpora for the WER filter.

use std::collections::BTreeMap;

use xmodal_core::corpus::{filter_by_wer, ManifestRecord};
use xmodal_core::rng;

const WORDS: [&str; 8] = ["le", "chat", "dort", "sur", "un", "tapis", "rouge", "ici"];

/// `n` records whose hypotheses are noisy copies of the article bodies.
pub fn random_corpus(n: usize, seed: u64) -> (Vec<ManifestRecord>, BTreeMap<String, String>) {
    let mut r = rng::seeded(seed);
    let mut records = Vec::with_capacity(n);
    let mut hyps = BTreeMap::new();
    for i in 0..n {
        let len = 1 + rng::below(&mut r, 12);
        let body: Vec<&str> = (0..len).map(|_| WORDS[rng::below(&mut r, 8)]).collect();
        let noise = rng::uniform(&mut r, 0.0, 1.0);
        let mut hyp = Vec::new();
        for &w in &body {
            if rng::bernoulli(&mut r, noise) {
                match rng::below(&mut r, 3) {
                    0 => {}
                    1 => hyp.push(WORDS[rng::below(&mut r, 8)]),
                    _ => {
                        hyp.push(w);
                        hyp.push(WORDS[rng::below(&mut r, 8)]);
                    }
                }
            } else {
                hyp.push(w);
            }
        }
        let id = format!("doc{i:04}");
        hyps.insert(id.clone(), hyp.join(" "));
        records.push(ManifestRecord {
            id,
            article_body: body.join(" "),
            ..Default::default()
        });
    }
    (records, hyps)
}

/// Kept ids at each threshold form a chain under inclusion, and every record
/// is kept exactly when its reported WER is at most the threshold.
pub fn filter_is_monotone(n: usize, seed: u64, thresholds: &[f64]) -> bool {
    let (records, hyps) = random_corpus(n, seed);
    let mut sorted = thresholds.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut previous: Option<Vec<String>> = None;
    for &t in &sorted {
        let report = filter_by_wer(&records, &hyps, t).unwrap();
        let kept: Vec<String> = report.kept.iter().map(|r| r.id.clone()).collect();
        let expected: Vec<String> = report
            .wer
            .iter()
            .filter(|(_, w)| *w <= t)
            .map(|(id, _)| id.clone())
            .collect();
        if kept != expected {
            return false;
        }
        if let Some(prev) = &previous {
            if !prev.iter().all(|id| kept.contains(id)) {
                return false;
            }
        }
        previous = Some(kept);
    }
    true
}
