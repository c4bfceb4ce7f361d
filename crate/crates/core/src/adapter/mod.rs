//! Cross-modal adapter: speech feature sequences in, textual embedding
//! sequences out.
//!
//! The network is a two-layer strided convolution that shortens the input
//! roughly fourfold, a one-layer BiLSTM encoder, and a one-layer LSTM decoder
//! with three attention mechanisms:
//!
//! * intra-temporal cross attention over encoder states, whose scores are
//!   first normalised over past decoding steps per encoder position;
//! * intra-decoder attention over the decoder's own past hidden states;
//! * windowed EOS attention over the generated embeddings, feeding a
//!   logistic end-of-sequence head.
//!
//! All functions operate on a [`Graph`](crate::numerics::Graph) so the same
//! code path serves training and inference.

mod attention;
mod network;
mod params;

use alloc::string::String;
use core::fmt;

use crate::numerics::NumericsError;

pub use attention::{cross_attention, eos_attention, intra_decoder_attention, CrossAttention};
pub use network::{
    decoder_step, downsample, downsampled_len, encode, eos_probability, input_frames, DecoderState,
    EncoderStates,
};
pub use params::{AdapterParams, ParamId, ParamVars};

/// Architecture and inference hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdapterConfig {
    pub d_in: usize,
    /// LSTM hidden size per direction.
    pub d_h: usize,
    pub d_txt: usize,
    pub conv_kernel: usize,
    pub conv_stride: usize,
    /// Half-width of the EOS attention window.
    pub eos_window: usize,
    /// Number of embeddings generated before thresholding.
    pub t_max: usize,
    /// EOS probability threshold.
    pub pi: f64,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        Self {
            d_in: 768,
            d_h: 768,
            d_txt: 768,
            conv_kernel: 5,
            conv_stride: 2,
            eos_window: 1,
            t_max: 512,
            pi: 0.5,
        }
    }
}

impl AdapterConfig {
    /// Desk-scale dimensions with the default conv/EOS/inference settings.
    pub fn with_dims(d_in: usize, d_h: usize, d_txt: usize) -> Self {
        Self {
            d_in,
            d_h,
            d_txt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), AdapterError> {
        let dims = [
            ("d_in", self.d_in),
            ("d_h", self.d_h),
            ("d_txt", self.d_txt),
            ("conv_kernel", self.conv_kernel),
            ("conv_stride", self.conv_stride),
            ("t_max", self.t_max),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(AdapterError::Config(alloc::format!("{name} must be >= 1")));
            }
        }
        if !(0.0..=1.0).contains(&self.pi) {
            return Err(AdapterError::Config(alloc::format!(
                "pi must lie in [0, 1], got {}",
                self.pi
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AdapterError {
    Numerics(NumericsError),
    Config(String),
    EmptyInput(&'static str),
    /// A non-finite value appeared at the named stage.
    NonFinite(&'static str),
    AccumulatorMismatch {
        accumulator: usize,
        keys: usize,
    },
    StepOutOfRange {
        step: usize,
        len: usize,
    },
}

impl fmt::Display for AdapterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Numerics(e) => write!(f, "{e}"),
            Self::Config(msg) => write!(f, "invalid adapter config: {msg}"),
            Self::EmptyInput(what) => write!(f, "{what}: empty input"),
            Self::NonFinite(stage) => write!(f, "non-finite value in {stage}"),
            Self::AccumulatorMismatch { accumulator, keys } => write!(
                f,
                "cross-attention accumulator has {accumulator} entries but there are {keys} keys"
            ),
            Self::StepOutOfRange { step, len } => {
                write!(f, "step {step} outside sequence of length {len}")
            }
        }
    }
}

impl core::error::Error for AdapterError {}

impl From<NumericsError> for AdapterError {
    fn from(e: NumericsError) -> Self {
        Self::Numerics(e)
    }
}
