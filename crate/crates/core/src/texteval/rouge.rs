use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::NormalizedText;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    /// From a match count and the two lengths; `f1 = 2m / (n_hyp + n_ref)`.
    fn from_counts(matches: usize, hyp_len: usize, ref_len: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        Self {
            precision: ratio(matches, hyp_len),
            recall: ratio(matches, ref_len),
            f1: ratio(2 * matches, hyp_len + ref_len),
        }
    }
}

/// All four variants for one reference/hypothesis pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RougeReport {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    pub rouge_l: RougeScore,
    pub rouge_lsum: RougeScore,
}

impl RougeReport {
    /// `reference`/`hypothesis` hold newline-separated sentences.
    pub fn compute(reference: &str, hypothesis: &str) -> Self {
        let r = super::normalize_text(reference);
        let h = super::normalize_text(hypothesis);
        let split = |s: &str| -> Vec<NormalizedText> {
            s.lines()
                .map(super::normalize_text)
                .filter(|t| !t.is_empty())
                .collect()
        };
        Self {
            rouge1: rouge_n(&r, &h, 1),
            rouge2: rouge_n(&r, &h, 2),
            rouge_l: rouge_l(&r, &h),
            rouge_lsum: rouge_lsum(&split(reference), &split(hypothesis)),
        }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<&[String], usize> {
    let mut counts = BTreeMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram overlap.
pub fn rouge_n(reference: &NormalizedText, hypothesis: &NormalizedText, n: usize) -> RougeScore {
    let rc = ngram_counts(reference.tokens(), n);
    let hc = ngram_counts(hypothesis.tokens(), n);
    let overlap = hc
        .iter()
        .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
        .sum();
    RougeScore::from_counts(overlap, hc.values().sum(), rc.values().sum())
}

fn lcs_table(a: &[String], b: &[String]) -> Vec<Vec<usize>> {
    let mut t = vec![vec![0; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t
}

/// Positions in `a` that take part in one longest common subsequence with `b`.
fn lcs_positions(a: &[String], b: &[String]) -> Vec<usize> {
    let t = lcs_table(a, b);
    let (mut i, mut j) = (a.len(), b.len());
    let mut out = Vec::new();
    while i > 0 && j > 0 {
        if a[i - 1] == b[j - 1] {
            out.push(i - 1);
            i -= 1;
            j -= 1;
        } else if t[i - 1][j] >= t[i][j - 1] {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    out.reverse();
    out
}

pub fn rouge_l(reference: &NormalizedText, hypothesis: &NormalizedText) -> RougeScore {
    let (r, h) = (reference.tokens(), hypothesis.tokens());
    let lcs = lcs_table(r, h)[r.len()][h.len()];
    RougeScore::from_counts(lcs, h.len(), r.len())
}

/// Summary-level LCS: for each reference sentence, the union of its LCS
/// positions against every hypothesis sentence, with hits clipped by the
/// token counts of both sides.
pub fn rouge_lsum(reference: &[NormalizedText], hypothesis: &[NormalizedText]) -> RougeScore {
    let ref_len: usize = reference.iter().map(NormalizedText::len).sum();
    let hyp_len: usize = hypothesis.iter().map(NormalizedText::len).sum();
    let mut ref_counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut hyp_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in reference.iter().flat_map(|s| s.tokens()) {
        *ref_counts.entry(t).or_insert(0) += 1;
    }
    for t in hypothesis.iter().flat_map(|s| s.tokens()) {
        *hyp_counts.entry(t).or_insert(0) += 1;
    }
    let mut hits = 0;
    for r in reference {
        let mut union: Vec<usize> = hypothesis
            .iter()
            .flat_map(|h| lcs_positions(r.tokens(), h.tokens()))
            .collect();
        union.sort_unstable();
        union.dedup();
        for pos in union {
            let tok = r.tokens()[pos].as_str();
            let (Some(rc), Some(hc)) = (ref_counts.get_mut(tok), hyp_counts.get_mut(tok)) else {
                continue;
            };
            if *rc > 0 && *hc > 0 {
                *rc -= 1;
                *hc -= 1;
                hits += 1;
            }
        }
    }
    RougeScore::from_counts(hits, hyp_len, ref_len)
}
