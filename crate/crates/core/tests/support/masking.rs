//! Masked-fraction statistics against an independent span simulation.

use xmodal_core::training::{mask_positions, MaskConfig};

/// SplitMix64, unrelated to the crate's generator.
struct SplitMix(u64);

impl SplitMix {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Fraction of positions covered when a span of `m` starts at each position
/// with probability `p`, tracked as a countdown of remaining covered frames.
fn simulate(p: f64, m: usize, len: usize, seed: u64) -> f64 {
    let mut r = SplitMix(seed);
    let mut remaining = 0usize;
    let mut covered = 0usize;
    for _ in 0..len {
        if r.next_f64() < p {
            remaining = m;
        }
        if remaining > 0 {
            covered += 1;
            remaining -= 1;
        }
    }
    covered as f64 / len as f64
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy)]
pub struct MaskBand {
    pub empirical: f64,
    pub oracle: f64,
    /// Standard error of the difference of the two means.
    pub sigma: f64,
}

impl MaskBand {
    pub fn within(&self, k: f64) -> bool {
        (self.empirical - self.oracle).abs() <= k * self.sigma
    }
}

pub fn masking_band(cfg: &MaskConfig, len: usize, seeds: u64) -> MaskBand {
    let ours: Vec<f64> = (0..seeds)
        .map(|s| {
            let m = mask_positions(len, cfg, s);
            m.iter().filter(|&&b| b).count() as f64 / len as f64
        })
        .collect();
    let theirs: Vec<f64> = (0..seeds)
        .map(|s| simulate(cfg.p_mask, cfg.m_len, len, 0xabcd_0000 + s))
        .collect();
    let (empirical, _) = mean_sd(&ours);
    let (oracle, sd) = mean_sd(&theirs);
    MaskBand {
        empirical,
        oracle,
        sigma: sd * (2.0 / seeds as f64).sqrt(),
    }
}
