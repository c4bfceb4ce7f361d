use alloc::vec::Vec;

use super::network::{DecoderState, EncoderStates};
use super::{AdapterConfig, AdapterError, ParamId, ParamVars};
use crate::numerics::{Graph, Tensor, Var};

#[derive(Clone, Copy, Debug)]
pub struct CrossAttention {
    /// `c^e_t = Σ_i α_ti h^e_i`.
    pub context: Var,
    pub weights: Var,
    /// Accumulator after this step: previous sums plus `exp(e^e_ti)`.
    pub score_sum: Var,
}

/// Intra-temporal attention of the decoder state `state.h` over the encoder keys.
///
/// With `e_ti = h_t · W_e h^e_i`, the step-`t` weights are
/// `α_ti ∝ exp(e_ti) / Σ_{j<t} exp(e_ji)`; on the first step the
/// denominator is taken as 1. The normalisation over positions is done as a
/// softmax of `e_ti - ln Σ_{j<t} exp(e_ji)`, which is the same quantity.
pub fn cross_attention(
    g: &mut Graph,
    state: &DecoderState,
    enc: &EncoderStates,
) -> Result<CrossAttention, AdapterError> {
    let acc_len = g.value(state.score_sum).len();
    if acc_len != enc.len() || enc.is_empty() {
        return Err(AdapterError::AccumulatorMismatch {
            accumulator: acc_len,
            keys: enc.len(),
        });
    }
    let mut scores = Vec::with_capacity(enc.len());
    for &pk in &enc.projected_keys {
        scores.push(g.dot(state.h, pk)?);
    }
    let scores = g.concat(&scores)?;
    let logits = if state.step == 0 {
        scores
    } else {
        let log_sum = g.ln(state.score_sum);
        g.sub(scores, log_sum)?
    };
    let weights = g.softmax(logits)?;
    let context = g.weighted_sum(weights, &enc.keys)?;
    let exp_scores = g.exp(scores);
    let score_sum = g.add(state.score_sum, exp_scores)?;
    Ok(CrossAttention {
        context,
        weights,
        score_sum,
    })
}

/// Attention of `state.h` over the decoder's earlier hidden states.
///
/// Returns a zero context and no weights on the first step.
pub fn intra_decoder_attention(
    g: &mut Graph,
    cfg: &AdapterConfig,
    state: &DecoderState,
) -> Result<(Var, Option<Var>), AdapterError> {
    if state.history.is_empty() {
        return Ok((g.constant(Tensor::zeros(&[cfg.d_h])), None));
    }
    let mut scores = Vec::with_capacity(state.history.len());
    for &proj in &state.history_proj {
        scores.push(g.dot(state.h, proj)?);
    }
    let scores = g.concat(&scores)?;
    let weights = g.softmax(scores)?;
    let context = g.weighted_sum(weights, &state.history)?;
    Ok((context, Some(weights)))
}

/// Windowed attention of `ys[t-1]` (1-based `t`) over `ys[t-w ..= t+w]`,
/// clipped to the sequence. Scores are `y_t' · W_eos y_t`.
pub fn eos_attention(
    g: &mut Graph,
    pv: &ParamVars,
    ys: &[Var],
    t: usize,
    w: usize,
) -> Result<(Var, Var), AdapterError> {
    if ys.is_empty() {
        return Err(AdapterError::EmptyInput("eos_attention"));
    }
    if t == 0 || t > ys.len() {
        return Err(AdapterError::StepOutOfRange {
            step: t,
            len: ys.len(),
        });
    }
    let lo = t.saturating_sub(w).max(1);
    let hi = (t + w).min(ys.len());
    let window = &ys[lo - 1..hi];
    let query = g.linear(pv.get(ParamId::AttnEos), ys[t - 1])?;
    let mut scores = Vec::with_capacity(window.len());
    for &key in window {
        scores.push(g.dot(key, query)?);
    }
    let scores = g.concat(&scores)?;
    let weights = g.softmax(scores)?;
    let context = g.weighted_sum(weights, window)?;
    Ok((context, weights))
}
