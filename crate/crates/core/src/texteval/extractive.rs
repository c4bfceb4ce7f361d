use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{normalize_text, TextEvalError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractiveConfig {
    /// Word budget for the summary.
    pub w_bar: usize,
    /// Which [`SentenceEmbedder`] produced the vectors.
    pub provider: String,
}

impl Default for ExtractiveConfig {
    fn default() -> Self {
        Self {
            w_bar: 24,
            provider: TermFrequencyEmbedder::ID.to_string(),
        }
    }
}

pub trait SentenceEmbedder {
    fn id(&self) -> &str;
    fn embed(&self, sentences: &[String]) -> Vec<Vec<f64>>;
}

/// Raw term counts over the vocabulary of the sentences being embedded.
#[derive(Clone, Copy, Debug, Default)]
pub struct TermFrequencyEmbedder;

impl TermFrequencyEmbedder {
    pub const ID: &'static str = "tf";
}

impl SentenceEmbedder for TermFrequencyEmbedder {
    fn id(&self) -> &str {
        Self::ID
    }

    fn embed(&self, sentences: &[String]) -> Vec<Vec<f64>> {
        let tokenized: Vec<_> = sentences.iter().map(|s| normalize_text(s)).collect();
        let mut vocab = BTreeMap::new();
        for tok in tokenized.iter().flat_map(|t| t.tokens()) {
            let next = vocab.len();
            vocab.entry(tok.as_str()).or_insert(next);
        }
        tokenized
            .iter()
            .map(|t| {
                let mut v = vec![0.0; vocab.len()];
                for tok in t.tokens() {
                    v[vocab[tok.as_str()]] += 1.0;
                }
                v
            })
            .collect()
    }
}

fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = libm::sqrt(a.iter().map(|x| x * x).sum());
    let nb = libm::sqrt(b.iter().map(|x| x * x).sum());
    if na == 0.0 || nb == 0.0 {
        None
    } else {
        Some(dot / (na * nb))
    }
}

/// Centroid summary: sentences closest to the mean embedding are taken until
/// the next one would push the word count past `w_bar`. The best sentence is
/// always kept. Output is in document order, one sentence per line.
pub fn extractive_summary(
    sentences: &[String],
    embeddings: &[Vec<f64>],
    cfg: &ExtractiveConfig,
) -> Result<String, TextEvalError> {
    if cfg.w_bar == 0 {
        return Err(TextEvalError::BadConfig("w_bar must be at least 1"));
    }
    if sentences.is_empty() {
        return Err(TextEvalError::NoSentences);
    }
    if sentences.len() != embeddings.len() {
        return Err(TextEvalError::LengthMismatch {
            sentences: sentences.len(),
            embeddings: embeddings.len(),
        });
    }
    let dim = embeddings[0].len();
    if embeddings.iter().any(|e| e.len() != dim) {
        return Err(TextEvalError::BadConfig("embeddings differ in length"));
    }
    let mut centroid = vec![0.0; dim];
    for e in embeddings {
        for (c, v) in centroid.iter_mut().zip(e) {
            *c += v;
        }
    }
    let n = embeddings.len() as f64;
    centroid.iter_mut().for_each(|c| *c /= n);

    let sims: Vec<Option<f64>> = embeddings.iter().map(|e| cosine(e, &centroid)).collect();
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    // Higher similarity first, unscorable sentences last, then document order.
    order.sort_by(|&a, &b| match (sims[a], sims[b]) {
        (Some(x), Some(y)) => y.total_cmp(&x).then(a.cmp(&b)),
        (Some(_), None) => core::cmp::Ordering::Less,
        (None, Some(_)) => core::cmp::Ordering::Greater,
        (None, None) => a.cmp(&b),
    });

    let words = |i: usize| sentences[i].split_whitespace().count();
    let mut chosen = vec![order[0]];
    let mut total = words(order[0]);
    for &i in &order[1..] {
        if total + words(i) > cfg.w_bar {
            break;
        }
        total += words(i);
        chosen.push(i);
    }
    chosen.sort_unstable();
    Ok(chosen
        .iter()
        .map(|&i| sentences[i].as_str())
        .collect::<Vec<_>>()
        .join("\n"))
}
