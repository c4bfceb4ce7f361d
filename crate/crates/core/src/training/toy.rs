//! A small recurrent token decoder that reads adapter outputs through
//! attention. It stands in for a pretrained text decoder in the joint stage.

use alloc::vec;
use alloc::vec::Vec;

use super::TrainError;
use crate::numerics::{Graph, Tensor, Var};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ToyConfig {
    pub vocab: usize,
    pub hidden: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            vocab: 3,
            hidden: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToyId {
    WInput,
    WHidden,
    Bias,
    Attn,
    WOut,
    BOut,
}

impl ToyId {
    pub const ALL: [ToyId; 6] = [
        ToyId::WInput,
        ToyId::WHidden,
        ToyId::Bias,
        ToyId::Attn,
        ToyId::WOut,
        ToyId::BOut,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ToyId::WInput => "toy.w_input",
            ToyId::WHidden => "toy.w_hidden",
            ToyId::Bias => "toy.bias",
            ToyId::Attn => "toy.attn",
            ToyId::WOut => "toy.w_out",
            ToyId::BOut => "toy.b_out",
        }
    }

    pub fn from_name(name: &str) -> Option<ToyId> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }

    fn shape(self, cfg: &ToyConfig, d_txt: usize) -> Vec<usize> {
        let (v, h) = (cfg.vocab, cfg.hidden);
        match self {
            ToyId::WInput => vec![h, v],
            ToyId::WHidden => vec![h, h],
            ToyId::Bias => vec![h],
            ToyId::Attn => vec![h, d_txt],
            ToyId::WOut => vec![v, h + d_txt],
            ToyId::BOut => vec![v],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyDecoderParams {
    config: ToyConfig,
    d_txt: usize,
    tensors: Vec<Tensor>,
}

impl ToyDecoderParams {
    /// Random recurrent weights and a zero output layer, so every initial
    /// prediction is uniform.
    pub fn init(config: ToyConfig, d_txt: usize, seed: u64) -> Result<Self, TrainError> {
        if config.vocab < 2 || config.hidden == 0 || d_txt == 0 {
            return Err(TrainError::Config(
                "toy decoder needs vocab >= 2 and hidden >= 1".into(),
            ));
        }
        let mut r = rng::seeded(seed);
        let tensors = ToyId::ALL
            .iter()
            .map(|&id| {
                let shape = id.shape(&config, d_txt);
                let mut t = Tensor::zeros(&shape);
                if matches!(id, ToyId::WInput | ToyId::WHidden | ToyId::Attn) {
                    let bound = 1.0 / libm::sqrt(shape[1] as f64);
                    for v in t.data_mut() {
                        *v = rng::uniform(&mut r, -bound, bound);
                    }
                }
                t
            })
            .collect();
        Ok(Self {
            config,
            d_txt,
            tensors,
        })
    }

    pub fn from_tensors(
        config: ToyConfig,
        d_txt: usize,
        mut lookup: impl FnMut(ToyId) -> Option<Tensor>,
    ) -> Result<Self, TrainError> {
        let mut p = Self::init(config, d_txt, 0)?;
        for id in ToyId::ALL {
            let t = lookup(id)
                .ok_or_else(|| TrainError::Data(alloc::format!("missing {}", id.name())))?;
            if t.shape() != id.shape(&config, d_txt).as_slice() || !t.is_finite() {
                return Err(TrainError::Data(alloc::format!("bad tensor {}", id.name())));
            }
            p.tensors[id as usize] = t;
        }
        Ok(p)
    }

    pub fn config(&self) -> ToyConfig {
        self.config
    }

    pub fn d_txt(&self) -> usize {
        self.d_txt
    }

    pub fn get(&self, id: ToyId) -> &Tensor {
        &self.tensors[id as usize]
    }

    pub(crate) fn get_mut(&mut self, id: ToyId) -> &mut Tensor {
        &mut self.tensors[id as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ToyId, &Tensor)> {
        ToyId::ALL.into_iter().zip(&self.tensors)
    }

    pub fn bind(&self, g: &mut Graph, trainable: bool) -> ToyVars {
        ToyVars(
            self.tensors
                .iter()
                .map(|t| {
                    if trainable {
                        g.param(t)
                    } else {
                        g.constant(t.clone())
                    }
                })
                .collect(),
        )
    }

    /// Greedy decoding of `len` tokens.
    pub fn decode_greedy(&self, ys: &[Vec<f64>], len: usize) -> Result<Vec<usize>, TrainError> {
        let mut g = Graph::new();
        let tv = self.bind(&mut g, false);
        let ys: Vec<Var> = ys
            .iter()
            .map(|y| g.constant(Tensor::vector(y.clone())))
            .collect();
        let mut run = ToyRun::new(&mut g, &tv, self.config, &ys)?;
        let mut prev = None;
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let logits = run.step(&mut g, &tv, prev)?;
            let best = g
                .data(logits)
                .iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |b, (i, &v)| if v > b.1 { (i, v) } else { b },
                )
                .0;
            out.push(best);
            prev = Some(best);
        }
        Ok(out)
    }
}

pub struct ToyVars(Vec<Var>);

impl ToyVars {
    pub fn get(&self, id: ToyId) -> Var {
        self.0[id as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ToyId, Var)> + '_ {
        ToyId::ALL.into_iter().zip(self.0.iter().copied())
    }
}

struct ToyRun<'a> {
    cfg: ToyConfig,
    ys: &'a [Var],
    keys: Vec<Var>,
    state: Var,
}

impl<'a> ToyRun<'a> {
    fn new(g: &mut Graph, tv: &ToyVars, cfg: ToyConfig, ys: &'a [Var]) -> Result<Self, TrainError> {
        if ys.is_empty() {
            return Err(TrainError::Data(
                "toy decoder needs a non-empty embedding sequence".into(),
            ));
        }
        let mut keys = Vec::with_capacity(ys.len());
        for &y in ys {
            keys.push(g.linear(tv.get(ToyId::Attn), y)?);
        }
        let state = g.constant(Tensor::zeros(&[cfg.hidden]));
        Ok(Self {
            cfg,
            ys,
            keys,
            state,
        })
    }

    /// Feeds the previous token (none at the first step) and returns logits.
    fn step(
        &mut self,
        g: &mut Graph,
        tv: &ToyVars,
        prev: Option<usize>,
    ) -> Result<Var, TrainError> {
        let mut onehot = vec![0.0; self.cfg.vocab];
        if let Some(p) = prev {
            onehot[p] = 1.0;
        }
        let x = g.constant(Tensor::vector(onehot));
        let zx = g.linear(tv.get(ToyId::WInput), x)?;
        let zh = g.linear(tv.get(ToyId::WHidden), self.state)?;
        let z = g.add(zx, zh)?;
        let z = g.add(z, tv.get(ToyId::Bias))?;
        let s = g.tanh(z);
        let mut scores = Vec::with_capacity(self.keys.len());
        for &k in &self.keys {
            scores.push(g.dot(s, k)?);
        }
        let scores = g.concat(&scores)?;
        let alpha = g.softmax(scores)?;
        let ctx = g.weighted_sum(alpha, self.ys)?;
        let feat = g.concat(&[s, ctx])?;
        let logits = g.linear(tv.get(ToyId::WOut), feat)?;
        self.state = s;
        Ok(g.add(logits, tv.get(ToyId::BOut))?)
    }
}

/// Mean per-token cross-entropy of `tokens` given embeddings `ys`, with
/// teacher-forced previous tokens.
pub fn toy_cross_entropy(
    g: &mut Graph,
    tv: &ToyVars,
    cfg: ToyConfig,
    ys: &[Var],
    tokens: &[usize],
) -> Result<Var, TrainError> {
    if tokens.is_empty() {
        return Err(TrainError::Data("no tokens to score".into()));
    }
    if let Some(&bad) = tokens.iter().find(|&&t| t >= cfg.vocab) {
        return Err(TrainError::Data(alloc::format!(
            "token {bad} outside a vocabulary of {}",
            cfg.vocab
        )));
    }
    let mut run = ToyRun::new(g, tv, cfg, ys)?;
    let mut terms = Vec::with_capacity(tokens.len());
    let mut prev = None;
    for &tok in tokens {
        let logits = run.step(g, tv, prev)?;
        let lsm = g.log_softmax(logits)?;
        terms.push(g.slice(lsm, tok, 1)?);
        prev = Some(tok);
    }
    let total = g.sum_all(&terms)?;
    Ok(g.scale(total, -1.0 / tokens.len() as f64))
}
