//! Free-running generation with EOS-threshold truncation.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::adapter::{input_frames, AdapterError, AdapterParams};
use crate::numerics::{Graph, NumericsError, Tensor};
use crate::training::{eos_probabilities, rollout, InputSource, NormStats, TrainError};

#[derive(Clone, Debug, PartialEq)]
pub enum InferenceError {
    MissingNormStats,
    Adapter(AdapterError),
    Input(String),
}

impl fmt::Display for InferenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingNormStats => write!(f, "embedding normalisation statistics are missing"),
            Self::Adapter(e) => write!(f, "adapter: {e}"),
            Self::Input(m) => write!(f, "{m}"),
        }
    }
}

impl core::error::Error for InferenceError {}

impl From<AdapterError> for InferenceError {
    fn from(e: AdapterError) -> Self {
        Self::Adapter(e)
    }
}

impl From<NumericsError> for InferenceError {
    fn from(e: NumericsError) -> Self {
        Self::Adapter(AdapterError::from(e))
    }
}

impl From<TrainError> for InferenceError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Adapter(a) => Self::Adapter(a),
            other => Self::Input(alloc::format!("{other}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationResult {
    /// All `t_max` generated embeddings, de-normalised.
    pub full: Tensor,
    pub eos_probs: Vec<f64>,
    /// 1-based cut position `t_π`.
    pub cut_index: usize,
    /// The first `t_π` rows of `full`.
    pub reduced: Tensor,
    /// No probability exceeded the threshold, so nothing was cut.
    pub truncation_miss: bool,
}

/// First 1-based `t` with `p_t > pi`, or `None`.
pub fn cut_index(probs: &[f64], pi: f64) -> Option<usize> {
    probs.iter().position(|&p| p > pi).map(|i| i + 1)
}

/// Generates `t_max` embeddings from normalised `[L, d_in]` features, each
/// step fed the previous output, then thresholds the EOS probabilities at
/// `pi` and maps the result back to embedding space with `embed_norm`.
pub fn generate(
    features: &Tensor,
    params: &AdapterParams,
    embed_norm: Option<&NormStats>,
) -> Result<GenerationResult, InferenceError> {
    let embed_norm = embed_norm.ok_or(InferenceError::MissingNormStats)?;
    let cfg = params.config();
    if features.rank() != 2 || features.cols() != cfg.d_in {
        return Err(InferenceError::Input(alloc::format!(
            "features of shape {:?} do not have width {}",
            features.shape(),
            cfg.d_in
        )));
    }
    if embed_norm.dim() != cfg.d_txt {
        return Err(InferenceError::Input(
            "normalisation width differs from d_txt".into(),
        ));
    }
    let mut g = Graph::new();
    let pv = params.bind(&mut g, |_| false);
    let frames = input_frames(&mut g, features);
    let sources: Vec<InputSource> = (0..cfg.t_max)
        .map(|i| match i {
            0 => InputSource::Start,
            i => InputSource::Model(i - 1),
        })
        .collect();
    let ro = rollout(&mut g, &pv, cfg, &frames, None, &sources)?;
    let probs: Vec<f64> = eos_probabilities(&mut g, &pv, cfg, &ro, cfg.t_max)?
        .into_iter()
        .map(|p| g.scalar(p))
        .collect();
    let rows: Vec<Vec<f64>> = ro.ys.iter().map(|&y| g.data(y).to_vec()).collect();
    let full = embed_norm.invert(&Tensor::from_rows(&rows)?)?;
    let (cut, miss) = match cut_index(&probs, cfg.pi) {
        Some(t) => (t, false),
        None => (cfg.t_max, true),
    };
    let reduced = Tensor::matrix(cut, cfg.d_txt, full.data()[..cut * cfg.d_txt].to_vec())?;
    Ok(GenerationResult {
        full,
        eos_probs: probs,
        cut_index: cut,
        reduced,
        truncation_miss: miss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapter::AdapterConfig;
    use alloc::vec;

    fn setup(pi: f64, t_max: usize) -> (Tensor, AdapterParams, NormStats) {
        let cfg = AdapterConfig {
            pi,
            t_max,
            ..AdapterConfig::with_dims(3, 4, 2)
        };
        let params = AdapterParams::init(&cfg, 5).unwrap();
        let x = Tensor::matrix(6, 3, (0..18).map(|v| f64::from(v) / 18.0).collect()).unwrap();
        let norm = NormStats {
            mean: vec![1.0, -1.0],
            std: vec![2.0, 0.5],
        };
        (x, params, norm)
    }

    #[test]
    fn threshold_edges() {
        let (x, p, n) = setup(0.0, 5);
        let r = generate(&x, &p, Some(&n)).unwrap();
        assert_eq!((r.cut_index, r.truncation_miss), (1, false));
        let (x, p, n) = setup(1.0, 5);
        let r = generate(&x, &p, Some(&n)).unwrap();
        assert_eq!((r.cut_index, r.truncation_miss), (5, true));
        assert_eq!(r.reduced, r.full);
        assert!(r.eos_probs.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn reduced_is_prefix_and_longer_runs_extend() {
        let (x, p, n) = setup(0.5, 4);
        let short = generate(&x, &p, Some(&n)).unwrap();
        let (_, mut p8, _) = setup(0.5, 8);
        p8.set_inference_config(&AdapterConfig {
            t_max: 8,
            ..p.config().clone()
        })
        .unwrap();
        let long = generate(&x, &p8, Some(&n)).unwrap();
        assert_eq!(&long.full.data()[..short.full.len()], short.full.data());
        let k = short.reduced.len();
        assert_eq!(short.reduced.data(), &short.full.data()[..k]);
    }

    #[test]
    fn missing_stats_is_an_error() {
        let (x, p, _) = setup(0.5, 3);
        assert_eq!(
            generate(&x, &p, None),
            Err(InferenceError::MissingNormStats)
        );
    }

    #[test]
    fn cut_examples() {
        assert_eq!(cut_index(&[0.1, 0.6, 0.9], 0.5), Some(2));
        assert_eq!(cut_index(&[0.5, 0.5], 0.5), None);
    }
}
