//! Text normalisation, WER, ROUGE and the centroid extractive baseline.

mod extractive;
mod rouge;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

pub use extractive::{
    extractive_summary, ExtractiveConfig, SentenceEmbedder, TermFrequencyEmbedder,
};
pub use rouge::{rouge_l, rouge_lsum, rouge_n, RougeReport, RougeScore};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TextEvalError {
    EmptyReference,
    LengthMismatch { sentences: usize, embeddings: usize },
    NoSentences,
    BadConfig(&'static str),
}

impl fmt::Display for TextEvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyReference => write!(f, "reference text is empty after normalisation"),
            Self::LengthMismatch {
                sentences,
                embeddings,
            } => write!(f, "{sentences} sentences but {embeddings} embeddings"),
            Self::NoSentences => write!(f, "no sentences to summarise"),
            Self::BadConfig(msg) => write!(f, "{msg}"),
        }
    }
}

impl core::error::Error for TextEvalError {}

/// Lower-cased, accent-free, punctuation-free word tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormalizedText(Vec<String>);

impl NormalizedText {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Tokens joined by single spaces.
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }
}

impl From<Vec<String>> for NormalizedText {
    /// Wraps tokens that are already normalised; empty tokens are dropped.
    fn from(tokens: Vec<String>) -> Self {
        Self(tokens.into_iter().filter(|t| !t.is_empty()).collect())
    }
}

pub fn normalize_text(s: &str) -> NormalizedText {
    let mut cleaned = String::with_capacity(s.len());
    for c in s.chars().flat_map(char::to_lowercase).nfd() {
        if is_combining_mark(c) {
            continue;
        }
        if c.is_alphanumeric() {
            cleaned.push(c);
        } else {
            cleaned.push(' ');
        }
    }
    NormalizedText(cleaned.split_whitespace().map(String::from).collect())
}

/// Word-level Levenshtein distance with unit costs.
pub fn edit_distance<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=hypothesis.len()).collect();
    let mut cur = vec![0; hypothesis.len() + 1];
    for (i, r) in reference.iter().enumerate() {
        cur[0] = i + 1;
        for (j, h) in hypothesis.iter().enumerate() {
            let sub = prev[j] + usize::from(r != h);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[hypothesis.len()]
}

/// `(S + D + I) / len(reference)`; may exceed 1.
pub fn wer(reference: &NormalizedText, hypothesis: &NormalizedText) -> Result<f64, TextEvalError> {
    if reference.is_empty() {
        return Err(TextEvalError::EmptyReference);
    }
    let dist = edit_distance(reference.tokens(), hypothesis.tokens());
    Ok(dist as f64 / reference.len() as f64)
}

/// Mean and the half-width of a 95% normal-approximation interval.
pub fn mean_with_ci(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * libm::sqrt(var / n))
}
