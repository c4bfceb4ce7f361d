//! Brute-force reference evaluation of the adapter, written directly from the
//! attention and recurrence formulas with plain loops over `f64`. Nothing here
//! touches the autodiff graph.

#![allow(dead_code)]

use xmodal_core::adapter::{AdapterConfig, AdapterParams, ParamId};
use xmodal_core::numerics::Tensor;

pub fn mat_vec(w: &Tensor, x: &[f64]) -> Vec<f64> {
    let (rows, cols) = (w.rows(), w.cols());
    assert_eq!(cols, x.len());
    let mut out = vec![0.0; rows];
    for r in 0..rows {
        let mut acc = 0.0;
        for c in 0..cols {
            acc += w.data()[r * cols + c] * x[c];
        }
        out[r] = acc;
    }
    out
}

/// `aᵀ W b`, summed element by element.
pub fn bilinear(a: &[f64], w: &Tensor, b: &[f64]) -> f64 {
    let cols = w.cols();
    let mut total = 0.0;
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            total += ai * w.data()[i * cols + j] * bj;
        }
    }
    total
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn lstm_cell(
    wx: &Tensor,
    wh: &Tensor,
    b: &Tensor,
    x: &[f64],
    h: &[f64],
    c: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let d = h.len();
    let zx = mat_vec(wx, x);
    let zh = mat_vec(wh, h);
    let mut h_new = vec![0.0; d];
    let mut c_new = vec![0.0; d];
    for k in 0..d {
        let z = |gate: usize| zx[gate * d + k] + zh[gate * d + k] + b.data()[gate * d + k];
        let i = sigmoid(z(0));
        let f = sigmoid(z(1));
        let g = z(2).tanh();
        let o = sigmoid(z(3));
        c_new[k] = f * c[k] + i * g;
        h_new[k] = o * c_new[k].tanh();
    }
    (h_new, c_new)
}

fn conv(w: &Tensor, b: &Tensor, frames: &[Vec<f64>], k: usize, s: usize) -> Vec<Vec<f64>> {
    let d = frames[0].len();
    let pad = k / 2;
    let out_len = (frames.len() + 2 * pad - k) / s + 1;
    (0..out_len)
        .map(|o| {
            let mut window = Vec::with_capacity(k * d);
            for j in 0..k {
                let pos = (o * s + j) as isize - pad as isize;
                if pos >= 0 && (pos as usize) < frames.len() {
                    window.extend_from_slice(&frames[pos as usize]);
                } else {
                    window.extend(std::iter::repeat_n(0.0, d));
                }
            }
            mat_vec(w, &window)
                .iter()
                .zip(b.data())
                .map(|(v, bb)| (v + bb).tanh())
                .collect()
        })
        .collect()
}

pub fn downsample(p: &AdapterParams, frames: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cfg = p.config();
    let (k, s) = (cfg.conv_kernel, cfg.conv_stride);
    let first = conv(p.get(ParamId::Conv1W), p.get(ParamId::Conv1B), frames, k, s);
    conv(p.get(ParamId::Conv2W), p.get(ParamId::Conv2B), &first, k, s)
}

pub struct EncoderOut {
    pub keys: Vec<Vec<f64>>,
    pub init_h: Vec<f64>,
    pub init_c: Vec<f64>,
}

pub fn encode(p: &AdapterParams, frames: &[Vec<f64>]) -> EncoderOut {
    let d = p.config().d_h;
    let n = frames.len();
    let mut fwd = Vec::new();
    let (mut h, mut c) = (vec![0.0; d], vec![0.0; d]);
    for x in frames {
        (h, c) = lstm_cell(
            p.get(ParamId::EncFwdWx),
            p.get(ParamId::EncFwdWh),
            p.get(ParamId::EncFwdB),
            x,
            &h,
            &c,
        );
        fwd.push(h.clone());
    }
    let (fh, fc) = (h, c);
    let mut bwd = vec![Vec::new(); n];
    let (mut h, mut c) = (vec![0.0; d], vec![0.0; d]);
    for i in (0..n).rev() {
        (h, c) = lstm_cell(
            p.get(ParamId::EncBwdWx),
            p.get(ParamId::EncBwdWh),
            p.get(ParamId::EncBwdB),
            &frames[i],
            &h,
            &c,
        );
        bwd[i] = h.clone();
    }
    let keys = fwd
        .into_iter()
        .zip(bwd)
        .map(|(mut f, b)| {
            f.extend(b);
            f
        })
        .collect();
    let finals: Vec<f64> = [fh, h, fc, c].concat();
    let bridged: Vec<f64> = mat_vec(p.get(ParamId::BridgeW), &finals)
        .iter()
        .zip(p.get(ParamId::BridgeB).data())
        .map(|(a, b)| a + b)
        .collect();
    EncoderOut {
        keys,
        init_h: bridged[..d].to_vec(),
        init_c: bridged[d..].to_vec(),
    }
}

/// Intra-temporal cross attention for step `t` (1-based) given all raw
/// scores of steps `1..=t` (`scores[j][i] = e_(j+1),i`).
pub fn cross_weights(scores: &[Vec<f64>], t: usize) -> Vec<f64> {
    let cur = &scores[t - 1];
    let primed: Vec<f64> = (0..cur.len())
        .map(|i| {
            if t == 1 {
                cur[i].exp()
            } else {
                let denom: f64 = (0..t - 1).map(|j| scores[j][i].exp()).sum();
                cur[i].exp() / denom
            }
        })
        .collect();
    let total: f64 = primed.iter().sum();
    primed.iter().map(|e| e / total).collect()
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let exps: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

pub fn weighted(weights: &[f64], values: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; values[0].len()];
    for (w, v) in weights.iter().zip(values) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += w * x;
        }
    }
    out
}

/// Windowed EOS context at 1-based `t`.
pub fn eos_context(w_eos: &Tensor, ys: &[Vec<f64>], t: usize, w: usize) -> Vec<f64> {
    let lo = if t > w { t - w } else { 1 };
    let hi = (t + w).min(ys.len());
    let window: Vec<Vec<f64>> = ys[lo - 1..hi].to_vec();
    let scores: Vec<f64> = window
        .iter()
        .map(|k| bilinear(k, w_eos, &ys[t - 1]))
        .collect();
    weighted(&softmax(&scores), &window)
}

pub struct DecodeTrace {
    pub ys: Vec<Vec<f64>>,
    pub hs: Vec<Vec<f64>>,
    pub cs: Vec<Vec<f64>>,
    pub cross_weights: Vec<Vec<f64>>,
    pub intra_weights: Vec<Vec<f64>>,
    /// Accumulator `Σ_{j≤t} exp(e_ji)` after each step.
    pub sums: Vec<Vec<f64>>,
}

/// Runs the decoder with the given inputs (`inputs[0]` is normally the start
/// vector), recomputing every attention from scratch each step.
pub fn decode(p: &AdapterParams, enc: &EncoderOut, inputs: &[Vec<f64>]) -> DecodeTrace {
    let mut trace = DecodeTrace {
        ys: vec![],
        hs: vec![],
        cs: vec![],
        cross_weights: vec![],
        intra_weights: vec![],
        sums: vec![],
    };
    let d = p.config().d_h;
    let (mut h, mut c) = (enc.init_h.clone(), enc.init_c.clone());
    let mut raw_scores: Vec<Vec<f64>> = Vec::new();
    for (step, x) in inputs.iter().enumerate() {
        let t = step + 1;
        (h, c) = lstm_cell(
            p.get(ParamId::DecWx),
            p.get(ParamId::DecWh),
            p.get(ParamId::DecB),
            x,
            &h,
            &c,
        );
        raw_scores.push(
            enc.keys
                .iter()
                .map(|k| bilinear(&h, p.get(ParamId::AttnEnc), k))
                .collect(),
        );
        let alpha = cross_weights(&raw_scores, t);
        let c_e = weighted(&alpha, &enc.keys);
        let sums: Vec<f64> = (0..enc.keys.len())
            .map(|i| (0..t).map(|j| raw_scores[j][i].exp()).sum())
            .collect();
        let (c_d, intra) = if trace.hs.is_empty() {
            (vec![0.0; d], vec![])
        } else {
            let scores: Vec<f64> = trace
                .hs
                .iter()
                .map(|hp| bilinear(&h, p.get(ParamId::AttnDec), hp))
                .collect();
            let a = softmax(&scores);
            (weighted(&a, &trace.hs), a)
        };
        let features = [h.clone(), c.clone(), c_e, c_d].concat();
        trace.ys.push(mat_vec(p.get(ParamId::Text), &features));
        trace.cross_weights.push(alpha);
        trace.intra_weights.push(intra);
        trace.sums.push(sums);
        trace.hs.push(h.clone());
        trace.cs.push(c.clone());
    }
    trace
}

pub fn eos_probability(p: &AdapterParams, h: &[f64], c: &[f64], c_eos: &[f64]) -> f64 {
    let z = [h, c, c_eos].concat();
    sigmoid(mat_vec(p.get(ParamId::Eos), &z)[0])
}

/// Random parameters with a wider spread than the training init, so the
/// attention weights are far from uniform.
pub fn random_params(cfg: &AdapterConfig, seed: u64, scale: f64) -> AdapterParams {
    let mut p = AdapterParams::init(cfg, seed).unwrap();
    let mut rng = xmodal_core::rng::seeded(seed ^ 0x5eed);
    for id in ParamId::ALL {
        for v in p.get_mut(id).data_mut() {
            *v = scale * xmodal_core::rng::normal(&mut rng);
        }
    }
    p
}

pub fn random_rows(rows: usize, cols: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = xmodal_core::rng::seeded(seed);
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| xmodal_core::rng::normal(&mut rng))
                .collect()
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
