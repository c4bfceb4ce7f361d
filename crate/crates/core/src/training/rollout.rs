use alloc::vec::Vec;

use super::{InputSource, TrainError};
use crate::adapter::{
    decoder_step, downsample, encode, eos_attention, eos_probability, AdapterConfig, DecoderState,
    ParamId, ParamVars,
};
use crate::numerics::{Graph, Tensor, Var};

/// Decoder outputs and states for every step of one unrolled sequence.
#[derive(Clone, Debug)]
pub struct Rollout {
    pub ys: Vec<Var>,
    pub hs: Vec<Var>,
    pub cs: Vec<Var>,
}

/// Encodes `frames` and runs one decoder step per entry of `sources`.
/// Teacher inputs are read from the rows of `targets`.
pub fn rollout(
    g: &mut Graph,
    pv: &ParamVars,
    cfg: &AdapterConfig,
    frames: &[Var],
    targets: Option<&Tensor>,
    sources: &[InputSource],
) -> Result<Rollout, TrainError> {
    let short = downsample(g, pv, cfg, frames)?;
    let enc = encode(g, pv, cfg, &short)?;
    let mut state = DecoderState::initial(g, &enc);
    let mut out = Rollout {
        ys: Vec::with_capacity(sources.len()),
        hs: Vec::with_capacity(sources.len()),
        cs: Vec::with_capacity(sources.len()),
    };
    for src in sources {
        let input = match *src {
            InputSource::Start => pv.get(ParamId::Start),
            InputSource::Teacher(i) => match targets {
                Some(t) if i < t.rows() => g.constant(Tensor::vector(t.row(i).to_vec())),
                _ => return Err(TrainError::Data("teacher input beyond the target".into())),
            },
            InputSource::Model(i) => *out
                .ys
                .get(i)
                .ok_or_else(|| TrainError::Data("model input from a future step".into()))?,
        };
        let (y, next) = decoder_step(g, pv, cfg, input, state, &enc)?;
        out.hs.push(next.h);
        out.cs.push(next.c);
        out.ys.push(y);
        state = next;
    }
    Ok(out)
}

/// EOS probabilities for steps `1..=upto` of a rollout.
pub fn eos_probabilities(
    g: &mut Graph,
    pv: &ParamVars,
    cfg: &AdapterConfig,
    ro: &Rollout,
    upto: usize,
) -> Result<Vec<Var>, TrainError> {
    (1..=upto.min(ro.ys.len()))
        .map(|t| {
            let (ctx, _) = eos_attention(g, pv, &ro.ys, t, cfg.eos_window)?;
            Ok(eos_probability(g, pv, ro.hs[t - 1], ro.cs[t - 1], ctx)?)
        })
        .collect()
}
