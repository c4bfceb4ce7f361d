use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::CorpusError;
use crate::numerics::Tensor;
use crate::rng::{self, SeededRng};
use crate::training::Example;

/// How targets are derived from features. Only one rule exists so far.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthRule {
    /// A fixed linear map of 8-frame block means, then an end marker.
    BlockMean,
}

impl SynthRule {
    pub fn name(self) -> &'static str {
        match self {
            SynthRule::BlockMean => "block-mean",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        (s == "block-mean").then_some(SynthRule::BlockMean)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub d_in: usize,
    pub d_txt: usize,
    pub len_min: usize,
    pub len_max: usize,
    pub rule: SynthRule,
    pub n_train: usize,
    pub n_val: usize,
    /// AR(1) coefficient of the random feature channels.
    pub smoothness: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            d_in: 16,
            d_txt: 8,
            len_min: 16,
            len_max: 48,
            rule: SynthRule::BlockMean,
            n_train: 500,
            n_val: 100,
            smoothness: 0.9,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.d_in < 2 || self.d_txt < 2 {
            return Err(CorpusError::Config("synthetic dims must be >= 2".into()));
        }
        if self.n_train == 0 || self.n_val == 0 {
            return Err(CorpusError::Config(
                "synthetic example counts must be >= 1".into(),
            ));
        }
        if self.len_min == 0 || self.len_min > self.len_max {
            return Err(CorpusError::Config("need 1 <= len_min <= len_max".into()));
        }
        if !(0.0..1.0).contains(&self.smoothness) {
            return Err(CorpusError::Config("smoothness must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Frames averaged into one target position.
const BLOCK: usize = 8;

/// `⌈L/8⌉ + 1`: one embedding per 8-frame block plus the end marker.
pub fn target_len(len: usize) -> usize {
    len.div_ceil(BLOCK) + 1
}

/// The ground-truth mapping from features to target embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct Teacher {
    /// `[d_txt, d_in]`; the last row is zero so content never uses the end channel.
    pub map: Tensor,
    /// Zero except for a one in the last (end) channel.
    pub end_marker: Vec<f64>,
}

impl Teacher {
    fn random(d_in: usize, d_txt: usize, rng: &mut SeededRng) -> Self {
        let scale = 1.0 / libm::sqrt(d_in as f64);
        let mut map = vec![0.0; d_txt * d_in];
        for v in map.iter_mut().take((d_txt - 1) * d_in) {
            *v = scale * rng::normal(rng);
        }
        let mut end_marker = vec![0.0; d_txt];
        end_marker[d_txt - 1] = 1.0;
        Self {
            map: Tensor::matrix(d_txt, d_in, map).expect("sizes agree"),
            end_marker,
        }
    }

    pub fn d_txt(&self) -> usize {
        self.map.rows()
    }

    /// Targets for an `[L, d_in]` feature matrix.
    pub fn targets(&self, features: &Tensor) -> Tensor {
        let (len, d_in) = (features.rows(), features.cols());
        let d_txt = self.d_txt();
        let mut rows = Vec::with_capacity(target_len(len));
        for start in (0..len).step_by(BLOCK) {
            let end = (start + BLOCK).min(len);
            let mut mean = vec![0.0; d_in];
            for r in start..end {
                for (m, v) in mean.iter_mut().zip(features.row(r)) {
                    *m += v;
                }
            }
            let n = (end - start) as f64;
            mean.iter_mut().for_each(|m| *m /= n);
            rows.push(
                (0..d_txt)
                    .map(|o| {
                        (0..d_in)
                            .map(|i| self.map.data()[o * d_in + i] * mean[i])
                            .sum()
                    })
                    .collect::<Vec<f64>>(),
            );
        }
        rows.push(self.end_marker.clone());
        Tensor::from_rows(&rows).expect("rows share a width")
    }

    /// One symbol per content position: 0 if the first channel is negative,
    /// otherwise 1 or 2 by the sign of the second.
    pub fn tokens(targets: &Tensor) -> Vec<usize> {
        (0..targets.rows().saturating_sub(1))
            .map(|t| {
                let row = targets.row(t);
                match (row[0] < 0.0, row[1] < 0.0) {
                    (true, _) => 0,
                    (false, true) => 1,
                    (false, false) => 2,
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthDataset {
    pub teacher: Teacher,
    pub train: Vec<Example>,
    pub val: Vec<Example>,
}

/// Smooth features: AR(1) noise with unit stationary variance, except
/// channel 0 which ramps linearly from -1 to 1 over the sequence.
fn features(cfg: &SynthConfig, len: usize, rng: &mut SeededRng) -> Tensor {
    let d = cfg.d_in;
    let rho = cfg.smoothness;
    let innov = libm::sqrt(1.0 - rho * rho);
    let mut data = vec![0.0; len * d];
    for c in 1..d {
        let mut x = rng::normal(rng);
        for l in 0..len {
            if l > 0 {
                x = rho * x + innov * rng::normal(rng);
            }
            data[l * d + c] = x;
        }
    }
    for l in 0..len {
        data[l * d] = 2.0 * (l as f64 + 0.5) / len as f64 - 1.0;
    }
    Tensor::matrix(len, d, data).expect("sizes agree")
}

pub fn synth_generate(cfg: &SynthConfig) -> Result<SynthDataset, CorpusError> {
    cfg.validate()?;
    let teacher = Teacher::random(cfg.d_in, cfg.d_txt, &mut rng::derive(cfg.seed, 0));
    let mut data_rng = rng::derive(cfg.seed, 1);
    let mut make = |prefix: &str, n: usize| -> Vec<Example> {
        (0..n)
            .map(|i| {
                let len = cfg.len_min + rng::below(&mut data_rng, cfg.len_max - cfg.len_min + 1);
                let features = features(cfg, len, &mut data_rng);
                let targets = teacher.targets(&features);
                Example {
                    id: format!("{prefix}-{i:05}"),
                    tokens: Teacher::tokens(&targets),
                    features,
                    targets,
                }
            })
            .collect()
    };
    let train = make("train", cfg.n_train);
    let val = make("val", cfg.n_val);
    Ok(SynthDataset {
        teacher,
        train,
        val,
    })
}
