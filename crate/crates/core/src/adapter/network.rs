use alloc::vec::Vec;

use super::attention::{cross_attention, intra_decoder_attention};
use super::{AdapterConfig, AdapterError, ParamId, ParamVars};
use crate::numerics::{Graph, Tensor, Var};

/// Encoder output: one key per downsampled position plus the decoder's
/// initial state.
#[derive(Clone, Debug)]
pub struct EncoderStates {
    /// `h^e_i = [forward ‖ backward]`, each of width `2·d_h`.
    pub keys: Vec<Var>,
    /// `W_attn_e · h^e_i`, cached so each decoding step costs one dot per key.
    pub projected_keys: Vec<Var>,
    pub init_h: Var,
    pub init_c: Var,
}

impl EncoderStates {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Recurrent decoder state between steps.
#[derive(Clone, Debug)]
pub struct DecoderState {
    pub h: Var,
    /// LSTM cell state `s^d`.
    pub c: Var,
    pub(super) history: Vec<Var>,
    pub(super) history_proj: Vec<Var>,
    /// `Σ_{j<t} exp(e^e_ji)` per encoder position.
    pub score_sum: Var,
    /// Number of completed decoding steps.
    pub step: usize,
    /// Attention weights of the most recent step.
    pub cross_weights: Option<Var>,
    pub intra_weights: Option<Var>,
}

impl DecoderState {
    pub fn initial(g: &mut Graph, enc: &EncoderStates) -> Self {
        let score_sum = g.constant(Tensor::zeros(&[enc.len()]));
        Self {
            h: enc.init_h,
            c: enc.init_c,
            history: Vec::new(),
            history_proj: Vec::new(),
            score_sum,
            step: 0,
            cross_weights: None,
            intra_weights: None,
        }
    }

    /// Past decoder hidden states `h^d_1 .. h^d_{t-1}`.
    pub fn history(&self) -> &[Var] {
        &self.history
    }
}

/// Length after both stride-`s` layers; `⌈⌈L/2⌉/2⌉` for the default conv.
pub fn downsampled_len(len: usize, cfg: &AdapterConfig) -> usize {
    let layer = |l: usize| (l + 2 * (cfg.conv_kernel / 2) - cfg.conv_kernel) / cfg.conv_stride + 1;
    layer(layer(len))
}

/// Places the rows of an `[L, d_in]` feature matrix on the graph.
pub fn input_frames(g: &mut Graph, features: &Tensor) -> Vec<Var> {
    (0..features.rows())
        .map(|i| g.constant(Tensor::vector(features.row(i).to_vec())))
        .collect()
}

fn check_finite(g: &Graph, v: Var, stage: &'static str) -> Result<(), AdapterError> {
    if g.value(v).is_finite() {
        Ok(())
    } else {
        Err(AdapterError::NonFinite(stage))
    }
}

fn conv_layer(
    g: &mut Graph,
    cfg: &AdapterConfig,
    w: Var,
    b: Var,
    frames: &[Var],
) -> Result<Vec<Var>, AdapterError> {
    let (k, s) = (cfg.conv_kernel, cfg.conv_stride);
    let pad = k / 2;
    let out_len = (frames.len() + 2 * pad - k) / s + 1;
    let zero = g.constant(Tensor::zeros(&[cfg.d_in]));
    let mut out = Vec::with_capacity(out_len);
    let mut window = Vec::with_capacity(k);
    for o in 0..out_len {
        window.clear();
        for j in 0..k {
            let pos = (o * s + j).checked_sub(pad);
            window.push(pos.and_then(|p| frames.get(p).copied()).unwrap_or(zero));
        }
        let stacked = g.concat(&window)?;
        let lin = g.linear(w, stacked)?;
        let pre = g.add(lin, b)?;
        out.push(g.tanh(pre));
    }
    Ok(out)
}

/// Two strided convolutions with tanh, shortening `L` to about `L/4`.
pub fn downsample(
    g: &mut Graph,
    pv: &ParamVars,
    cfg: &AdapterConfig,
    frames: &[Var],
) -> Result<Vec<Var>, AdapterError> {
    if frames.is_empty() {
        return Err(AdapterError::EmptyInput("downsample"));
    }
    let first = conv_layer(
        g,
        cfg,
        pv.get(ParamId::Conv1W),
        pv.get(ParamId::Conv1B),
        frames,
    )?;
    conv_layer(
        g,
        cfg,
        pv.get(ParamId::Conv2W),
        pv.get(ParamId::Conv2B),
        &first,
    )
}

struct LstmWeights {
    wx: Var,
    wh: Var,
    b: Var,
}

fn lstm_step(
    g: &mut Graph,
    w: &LstmWeights,
    d_h: usize,
    x: Var,
    h: Var,
    c: Var,
) -> Result<(Var, Var), AdapterError> {
    let zx = g.linear(w.wx, x)?;
    let zh = g.linear(w.wh, h)?;
    let z = g.add(zx, zh)?;
    let z = g.add(z, w.b)?;
    let i = g.slice(z, 0, d_h)?;
    let f = g.slice(z, d_h, d_h)?;
    let cand = g.slice(z, 2 * d_h, d_h)?;
    let o = g.slice(z, 3 * d_h, d_h)?;
    let i = g.sigmoid(i);
    let f = g.sigmoid(f);
    let cand = g.tanh(cand);
    let o = g.sigmoid(o);
    let keep = g.mul(f, c)?;
    let write = g.mul(i, cand)?;
    let c_new = g.add(keep, write)?;
    let tc = g.tanh(c_new);
    let h_new = g.mul(o, tc)?;
    Ok((h_new, c_new))
}

/// BiLSTM over the downsampled sequence, plus the bridge to decoder state.
pub fn encode(
    g: &mut Graph,
    pv: &ParamVars,
    cfg: &AdapterConfig,
    frames: &[Var],
) -> Result<EncoderStates, AdapterError> {
    if frames.is_empty() {
        return Err(AdapterError::EmptyInput("encode"));
    }
    if frames.iter().any(|&f| !g.value(f).is_finite()) {
        return Err(AdapterError::NonFinite("encoder input"));
    }
    let d_h = cfg.d_h;
    let fwd = LstmWeights {
        wx: pv.get(ParamId::EncFwdWx),
        wh: pv.get(ParamId::EncFwdWh),
        b: pv.get(ParamId::EncFwdB),
    };
    let bwd = LstmWeights {
        wx: pv.get(ParamId::EncBwdWx),
        wh: pv.get(ParamId::EncBwdWh),
        b: pv.get(ParamId::EncBwdB),
    };
    let zero = g.constant(Tensor::zeros(&[d_h]));

    let (mut h, mut c) = (zero, zero);
    let mut forward = Vec::with_capacity(frames.len());
    for &x in frames {
        (h, c) = lstm_step(g, &fwd, d_h, x, h, c)?;
        forward.push(h);
    }
    let (fwd_h, fwd_c) = (h, c);

    let (mut h, mut c) = (zero, zero);
    let mut backward = alloc::vec![zero; frames.len()];
    for (i, &x) in frames.iter().enumerate().rev() {
        (h, c) = lstm_step(g, &bwd, d_h, x, h, c)?;
        backward[i] = h;
    }
    let (bwd_h, bwd_c) = (h, c);

    let attn = pv.get(ParamId::AttnEnc);
    let mut keys = Vec::with_capacity(frames.len());
    let mut projected_keys = Vec::with_capacity(frames.len());
    for (f, b) in forward.into_iter().zip(backward) {
        let key = g.concat(&[f, b])?;
        check_finite(g, key, "encoder")?;
        projected_keys.push(g.linear(attn, key)?);
        keys.push(key);
    }

    let finals = g.concat(&[fwd_h, bwd_h, fwd_c, bwd_c])?;
    let bridged = g.linear(pv.get(ParamId::BridgeW), finals)?;
    let bridged = g.add(bridged, pv.get(ParamId::BridgeB))?;
    let init_h = g.slice(bridged, 0, d_h)?;
    let init_c = g.slice(bridged, d_h, d_h)?;
    check_finite(g, bridged, "encoder bridge")?;

    Ok(EncoderStates {
        keys,
        projected_keys,
        init_h,
        init_c,
    })
}

/// One decoder step: LSTM, both attentions, and the text projection
/// `y_t = W_text [h_t ‖ s_t ‖ c^e_t ‖ c^d_t]`.
pub fn decoder_step(
    g: &mut Graph,
    pv: &ParamVars,
    cfg: &AdapterConfig,
    input: Var,
    state: DecoderState,
    enc: &EncoderStates,
) -> Result<(Var, DecoderState), AdapterError> {
    if !g.value(input).is_finite() {
        return Err(AdapterError::NonFinite("decoder input"));
    }
    let weights = LstmWeights {
        wx: pv.get(ParamId::DecWx),
        wh: pv.get(ParamId::DecWh),
        b: pv.get(ParamId::DecB),
    };
    let (h, c) = lstm_step(g, &weights, cfg.d_h, input, state.h, state.c)?;
    check_finite(g, c, "decoder lstm")?;
    let mut next = DecoderState { h, c, ..state };

    let cross = cross_attention(g, &next, enc)?;
    check_finite(g, cross.context, "cross attention")?;
    let (c_d, intra_weights) = intra_decoder_attention(g, cfg, &next)?;
    check_finite(g, c_d, "intra-decoder attention")?;

    let features = g.concat(&[h, c, cross.context, c_d])?;
    let y = g.linear(pv.get(ParamId::Text), features)?;
    check_finite(g, y, "text projection")?;

    next.score_sum = cross.score_sum;
    next.cross_weights = Some(cross.weights);
    next.intra_weights = intra_weights;
    let proj = g.linear(pv.get(ParamId::AttnDec), h)?;
    next.history.push(h);
    next.history_proj.push(proj);
    next.step += 1;
    Ok((y, next))
}

/// `σ(W_eos [h_t ‖ s_t ‖ c^eos_t])` as a one-element node.
pub fn eos_probability(
    g: &mut Graph,
    pv: &ParamVars,
    h: Var,
    s: Var,
    c_eos: Var,
) -> Result<Var, AdapterError> {
    let z = g.concat(&[h, s, c_eos])?;
    let logit = g.linear(pv.get(ParamId::Eos), z)?;
    Ok(g.sigmoid(logit))
}
