use alloc::vec;
use alloc::vec::Vec;

use super::{AdapterConfig, AdapterError};
use crate::numerics::{Graph, Tensor, Var};
use crate::rng;

/// Identifies one trainable tensor of the adapter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamId {
    Conv1W,
    Conv1B,
    Conv2W,
    Conv2B,
    EncFwdWx,
    EncFwdWh,
    EncFwdB,
    EncBwdWx,
    EncBwdWh,
    EncBwdB,
    BridgeW,
    BridgeB,
    DecWx,
    DecWh,
    DecB,
    Start,
    AttnEnc,
    AttnDec,
    AttnEos,
    Text,
    Eos,
    MaskEmbedding,
}

impl ParamId {
    pub const ALL: [ParamId; 22] = [
        ParamId::Conv1W,
        ParamId::Conv1B,
        ParamId::Conv2W,
        ParamId::Conv2B,
        ParamId::EncFwdWx,
        ParamId::EncFwdWh,
        ParamId::EncFwdB,
        ParamId::EncBwdWx,
        ParamId::EncBwdWh,
        ParamId::EncBwdB,
        ParamId::BridgeW,
        ParamId::BridgeB,
        ParamId::DecWx,
        ParamId::DecWh,
        ParamId::DecB,
        ParamId::Start,
        ParamId::AttnEnc,
        ParamId::AttnDec,
        ParamId::AttnEos,
        ParamId::Text,
        ParamId::Eos,
        ParamId::MaskEmbedding,
    ];

    /// The parameters the EOS pre-training stage is allowed to update.
    pub const EOS_HEAD: [ParamId; 2] = [ParamId::AttnEos, ParamId::Eos];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::Conv1W => "conv1.weight",
            ParamId::Conv1B => "conv1.bias",
            ParamId::Conv2W => "conv2.weight",
            ParamId::Conv2B => "conv2.bias",
            ParamId::EncFwdWx => "encoder.fwd.w_input",
            ParamId::EncFwdWh => "encoder.fwd.w_hidden",
            ParamId::EncFwdB => "encoder.fwd.bias",
            ParamId::EncBwdWx => "encoder.bwd.w_input",
            ParamId::EncBwdWh => "encoder.bwd.w_hidden",
            ParamId::EncBwdB => "encoder.bwd.bias",
            ParamId::BridgeW => "bridge.weight",
            ParamId::BridgeB => "bridge.bias",
            ParamId::DecWx => "decoder.w_input",
            ParamId::DecWh => "decoder.w_hidden",
            ParamId::DecB => "decoder.bias",
            ParamId::Start => "decoder.start",
            ParamId::AttnEnc => "attn.encoder",
            ParamId::AttnDec => "attn.decoder",
            ParamId::AttnEos => "attn.eos",
            ParamId::Text => "proj.text",
            ParamId::Eos => "proj.eos",
            ParamId::MaskEmbedding => "mask_embedding",
        }
    }

    pub fn from_name(name: &str) -> Option<ParamId> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn shape(self, cfg: &AdapterConfig) -> Vec<usize> {
        let (d_in, h, txt, k) = (cfg.d_in, cfg.d_h, cfg.d_txt, cfg.conv_kernel);
        match self {
            ParamId::Conv1W | ParamId::Conv2W => vec![d_in, d_in * k],
            ParamId::Conv1B | ParamId::Conv2B | ParamId::MaskEmbedding => vec![d_in],
            ParamId::EncFwdWx | ParamId::EncBwdWx => vec![4 * h, d_in],
            ParamId::EncFwdWh | ParamId::EncBwdWh | ParamId::DecWh => vec![4 * h, h],
            ParamId::EncFwdB | ParamId::EncBwdB | ParamId::DecB => vec![4 * h],
            ParamId::BridgeW => vec![2 * h, 4 * h],
            ParamId::BridgeB => vec![2 * h],
            ParamId::DecWx => vec![4 * h, txt],
            ParamId::Start => vec![txt],
            ParamId::AttnEnc => vec![h, 2 * h],
            ParamId::AttnDec => vec![h, h],
            ParamId::AttnEos => vec![txt, txt],
            ParamId::Text => vec![txt, 5 * h],
            ParamId::Eos => vec![1, 2 * h + txt],
        }
    }

    fn is_lstm_bias(self) -> bool {
        matches!(self, ParamId::EncFwdB | ParamId::EncBwdB | ParamId::DecB)
    }
}

/// All trainable tensors of the adapter plus the pre-training stage reached.
#[derive(Clone, Debug, PartialEq)]
pub struct AdapterParams {
    config: AdapterConfig,
    tensors: Vec<Tensor>,
    /// Highest completed training stage (0 = untrained, 1..3, 4 = joint).
    pub stage: u8,
}

impl AdapterParams {
    pub fn zeros(config: &AdapterConfig) -> Result<Self, AdapterError> {
        config.validate()?;
        let tensors = ParamId::ALL
            .iter()
            .map(|id| Tensor::zeros(&id.shape(config)))
            .collect();
        Ok(Self {
            config: config.clone(),
            tensors,
            stage: 0,
        })
    }

    /// Uniform `±1/sqrt(fan_in)` weights, zero biases, unit LSTM forget bias.
    pub fn init(config: &AdapterConfig, seed: u64) -> Result<Self, AdapterError> {
        let mut params = Self::zeros(config)?;
        let mut rng = rng::seeded(seed);
        let h = config.d_h;
        for id in ParamId::ALL {
            let t = &mut params.tensors[id.index()];
            if id.is_lstm_bias() {
                t.data_mut()[h..2 * h].fill(1.0);
                continue;
            }
            if matches!(id, ParamId::Conv1B | ParamId::Conv2B | ParamId::BridgeB) {
                continue;
            }
            let fan_in = if t.rank() == 2 { t.cols() } else { t.len() };
            let bound = 1.0 / libm::sqrt(fan_in as f64);
            for v in t.data_mut() {
                *v = rng::uniform(&mut rng, -bound, bound);
            }
        }
        Ok(params)
    }

    /// Rebuilds parameters from named tensors, checking every shape.
    pub fn from_tensors(
        config: &AdapterConfig,
        mut lookup: impl FnMut(ParamId) -> Option<Tensor>,
    ) -> Result<Self, AdapterError> {
        let mut params = Self::zeros(config)?;
        for id in ParamId::ALL {
            let t = lookup(id).ok_or_else(|| {
                AdapterError::Config(alloc::format!("missing parameter {}", id.name()))
            })?;
            params.set(id, t)?;
        }
        Ok(params)
    }

    pub fn config(&self) -> &AdapterConfig {
        &self.config
    }

    /// Replaces the inference-only settings (window, t_max, pi).
    pub fn set_inference_config(&mut self, cfg: &AdapterConfig) -> Result<(), AdapterError> {
        cfg.validate()?;
        if (cfg.d_in, cfg.d_h, cfg.d_txt, cfg.conv_kernel)
            != (
                self.config.d_in,
                self.config.d_h,
                self.config.d_txt,
                self.config.conv_kernel,
            )
        {
            return Err(AdapterError::Config(
                "dimensions differ from the stored parameters".into(),
            ));
        }
        self.config = cfg.clone();
        Ok(())
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.index()]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.index()]
    }

    pub fn set(&mut self, id: ParamId, t: Tensor) -> Result<(), AdapterError> {
        let expected = id.shape(&self.config);
        if t.shape() != expected.as_slice() {
            return Err(AdapterError::Config(alloc::format!(
                "{} has shape {:?}, expected {:?}",
                id.name(),
                t.shape(),
                expected
            )));
        }
        if !t.is_finite() {
            return Err(AdapterError::NonFinite("parameter load"));
        }
        self.tensors[id.index()] = t;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        ParamId::ALL.into_iter().zip(self.tensors.iter())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    /// Places every tensor on `g`; those for which `trainable` holds get gradients.
    pub fn bind(&self, g: &mut Graph, trainable: impl Fn(ParamId) -> bool) -> ParamVars {
        let vars = ParamId::ALL
            .iter()
            .map(|&id| {
                let t = &self.tensors[id.index()];
                if trainable(id) {
                    g.param(t)
                } else {
                    g.constant(t.clone())
                }
            })
            .collect();
        ParamVars { vars }
    }
}

/// Graph handles for every adapter parameter.
#[derive(Clone, Debug)]
pub struct ParamVars {
    vars: Vec<Var>,
}

impl ParamVars {
    /// Wraps handles given in [`ParamId::ALL`] order.
    pub fn from_vars(vars: Vec<Var>) -> Self {
        assert_eq!(vars.len(), ParamId::ALL.len(), "one handle per parameter");
        Self { vars }
    }

    pub fn get(&self, id: ParamId) -> Var {
        self.vars[id.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, Var)> + '_ {
        ParamId::ALL.into_iter().zip(self.vars.iter().copied())
    }
}
