use alloc::vec;
use alloc::vec::Vec;

use super::TrainError;
use crate::numerics::{Graph, Tensor, Var};
use crate::rng;

/// Span masking of input frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskConfig {
    /// Probability that a span starts at any given position.
    pub p_mask: f64,
    /// Span length in frames; spans running off the end are clipped.
    pub m_len: usize,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            p_mask: 6.5e-2,
            m_len: 10,
        }
    }
}

impl MaskConfig {
    pub const NONE: MaskConfig = MaskConfig {
        p_mask: 0.0,
        m_len: 1,
    };

    pub fn validate(&self) -> Result<(), TrainError> {
        if !(0.0..=1.0).contains(&self.p_mask) {
            return Err(TrainError::Config("p_mask must lie in [0, 1]".into()));
        }
        if self.m_len == 0 {
            return Err(TrainError::Config("m_len must be at least 1".into()));
        }
        Ok(())
    }
}

/// Which of `len` positions are covered by a span. One Bernoulli draw per
/// position, in order, from a generator seeded with `seed`.
pub fn mask_positions(len: usize, cfg: &MaskConfig, seed: u64) -> Vec<bool> {
    let mut mask = vec![false; len];
    if cfg.p_mask == 0.0 {
        return mask;
    }
    let mut r = rng::seeded(seed);
    for start in 0..len {
        if rng::bernoulli(&mut r, cfg.p_mask) {
            let end = (start + cfg.m_len).min(len);
            mask[start..end].fill(true);
        }
    }
    mask
}

/// Replaces masked rows of `[L, d_in]` features with `embedding`.
pub fn mask_features(
    features: &Tensor,
    embedding: &[f64],
    cfg: &MaskConfig,
    seed: u64,
) -> Result<(Tensor, Vec<bool>), TrainError> {
    cfg.validate()?;
    if features.rank() != 2 || features.cols() != embedding.len() {
        return Err(TrainError::Data(
            "mask embedding width differs from features".into(),
        ));
    }
    let mask = mask_positions(features.rows(), cfg, seed);
    let mut out = features.clone();
    let d = embedding.len();
    for (i, _) in mask.iter().enumerate().filter(|(_, m)| **m) {
        out.data_mut()[i * d..(i + 1) * d].copy_from_slice(embedding);
    }
    Ok((out, mask))
}

/// Graph version: masked frames become the (trainable) embedding node itself.
pub(crate) fn mask_frames(frames: &mut [Var], embedding: Var, mask: &[bool]) {
    for (f, _) in frames.iter_mut().zip(mask).filter(|(_, m)| **m) {
        *f = embedding;
    }
}

/// Places `features` on the graph, substituting `embedding` at masked rows.
pub(crate) fn masked_input(
    g: &mut Graph,
    features: &Tensor,
    embedding: Var,
    mask: &[bool],
) -> Vec<Var> {
    let mut frames = crate::adapter::input_frames(g, features);
    mask_frames(&mut frames, embedding, mask);
    frames
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(rows: usize, cols: usize) -> Tensor {
        Tensor::matrix(rows, cols, (0..rows * cols).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn zero_probability_is_identity() {
        let x = ramp(20, 3);
        let cfg = MaskConfig {
            p_mask: 0.0,
            m_len: 10,
        };
        let (y, m) = mask_features(&x, &[9.0; 3], &cfg, 1).unwrap();
        assert_eq!(y, x);
        assert!(m.iter().all(|b| !b));
    }

    #[test]
    fn certain_masking_covers_everything() {
        let x = ramp(7, 2);
        let cfg = MaskConfig {
            p_mask: 1.0,
            m_len: 1,
        };
        let (y, m) = mask_features(&x, &[-1.0, -2.0], &cfg, 3).unwrap();
        assert!(m.iter().all(|&b| b));
        assert!(y.data().chunks(2).all(|r| r == [-1.0, -2.0]));
    }

    #[test]
    fn spans_clip_at_the_end() {
        let cfg = MaskConfig {
            p_mask: 1.0,
            m_len: 50,
        };
        assert_eq!(mask_positions(4, &cfg, 0), vec![true; 4]);
    }

    #[test]
    fn bad_config() {
        let bad = MaskConfig {
            p_mask: 1.5,
            m_len: 1,
        };
        assert!(mask_features(&ramp(2, 1), &[0.0], &bad, 0).is_err());
    }
}
