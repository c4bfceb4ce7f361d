use alloc::vec::Vec;

use super::TrainError;
use crate::numerics::{Graph, Var};

/// Probabilities are clamped to `[P_CLAMP, 1 − P_CLAMP]` before taking logs.
pub const P_CLAMP: f64 = 1e-12;

/// Mean squared error over every position and dimension.
pub fn mse_loss(g: &mut Graph, preds: &[Var], targets: &[Var]) -> Result<Var, TrainError> {
    if preds.len() != targets.len() {
        return Err(TrainError::LengthMismatch {
            what: "mse_loss",
            left: preds.len(),
            right: targets.len(),
        });
    }
    if preds.is_empty() {
        return Err(TrainError::Data("mse_loss over an empty sequence".into()));
    }
    let width = g.value(preds[0]).len();
    let mut terms = Vec::with_capacity(preds.len());
    for (&p, &t) in preds.iter().zip(targets) {
        let diff = g.sub(p, t)?;
        let sq = g.mul(diff, diff)?;
        terms.push(g.sum(sq));
    }
    let total = g.sum_all(&terms)?;
    Ok(g.scale(total, 1.0 / (preds.len() * width) as f64))
}

/// Weighted binary cross-entropy with a single positive at `eos_index`
/// (1-based), averaged over all positions.
pub fn eos_bce_loss(
    g: &mut Graph,
    probs: &[Var],
    eos_index: usize,
    pos_weight: f64,
) -> Result<Var, TrainError> {
    if eos_index == 0 || eos_index > probs.len() {
        return Err(TrainError::LengthMismatch {
            what: "eos_bce_loss index",
            left: eos_index,
            right: probs.len(),
        });
    }
    let mut terms = Vec::with_capacity(probs.len());
    for (i, &p) in probs.iter().enumerate() {
        let p = g.clamp(p, P_CLAMP, 1.0 - P_CLAMP);
        let term = if i + 1 == eos_index {
            let lp = g.ln(p);
            g.scale(lp, pos_weight)
        } else {
            let q = g.scale(p, -1.0);
            let q = g.offset(q, 1.0);
            g.ln(q)
        };
        terms.push(g.sum(term));
    }
    let total = g.sum_all(&terms)?;
    Ok(g.scale(total, -1.0 / probs.len() as f64))
}
