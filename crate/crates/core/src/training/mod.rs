//! Losses, masking, teacher-forcing schedules and the staged training loop.

mod adam;
mod loss;
mod mask;
mod norm;
mod rollout;
mod schedule;
mod stage;
mod toy;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::adapter::{AdapterError, AdapterParams, ParamId};
use crate::numerics::{NumericsError, Tensor};

pub use adam::{Adam, AdamConfig};
pub use loss::{eos_bce_loss, mse_loss, P_CLAMP};
pub use mask::{mask_features, mask_positions, MaskConfig};
pub use norm::{NormStats, STD_FLOOR};
pub use rollout::{eos_probabilities, rollout, Rollout};
pub use schedule::{
    peel_back_inputs, teacher_forcing_ratio, teacher_steps, InputSource, ScheduleParams,
};
pub use stage::{evaluate, run_stage, MetricRow, StageOutcome};
pub use toy::{toy_cross_entropy, ToyConfig, ToyDecoderParams, ToyId, ToyVars};

/// One training pair: `[L, d_in]` features, `[T, d_txt]` target embeddings
/// (the last row marks the end), and summary tokens for the joint stage.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub id: String,
    pub features: Tensor,
    pub targets: Tensor,
    pub tokens: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StageId {
    /// Masked-input MSE with full teacher forcing.
    One,
    /// MSE under the peeling-back schedule.
    Two,
    /// EOS head only, binary cross-entropy.
    Three,
    /// Token cross-entropy through the toy decoder plus the EOS loss.
    Joint,
}

impl StageId {
    /// Value stored in [`AdapterParams::stage`] once this stage completes.
    pub fn level(self) -> u8 {
        match self {
            StageId::One => 1,
            StageId::Two => 2,
            StageId::Three => 3,
            StageId::Joint => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StageId::One => "stage1",
            StageId::Two => "stage2",
            StageId::Three => "stage3",
            StageId::Joint => "joint",
        }
    }

    pub fn parse(s: &str) -> Option<StageId> {
        match s {
            "1" | "stage1" => Some(StageId::One),
            "2" | "stage2" => Some(StageId::Two),
            "3" | "stage3" => Some(StageId::Three),
            "joint" => Some(StageId::Joint),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageConfig {
    pub stage: StageId,
    /// Only used by stage 1.
    pub mask: MaskConfig,
    pub schedule: ScheduleParams,
    pub optimizer: AdamConfig,
    pub batch_size: usize,
    pub steps: u64,
    /// Validation runs every this many steps (and at the first and last).
    pub eval_every: u64,
    /// Extra parameters held fixed. Stage 3 ignores this and trains only the EOS head.
    pub frozen: Vec<ParamId>,
    /// Positive-class weight for the EOS loss; `None` means `T/4` per example.
    pub pos_weight: Option<f64>,
    pub toy: ToyConfig,
    pub seed: u64,
}

impl StageConfig {
    /// Defaults for `stage`, including its schedule and masking constants.
    pub fn for_stage(stage: StageId) -> Self {
        let (mask, schedule) = match stage {
            StageId::One => (MaskConfig::default(), ScheduleParams::CONSTANT),
            StageId::Two => (MaskConfig::NONE, ScheduleParams::STAGE2),
            StageId::Three | StageId::Joint => (MaskConfig::NONE, ScheduleParams::STAGE3),
        };
        Self {
            stage,
            mask,
            schedule,
            optimizer: AdamConfig::default(),
            batch_size: 8,
            steps: 1000,
            eval_every: 100,
            frozen: Vec::new(),
            pos_weight: None,
            toy: ToyConfig::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        self.mask.validate()?;
        self.schedule.validate()?;
        if self.batch_size == 0 || self.eval_every == 0 {
            return Err(TrainError::Config(
                "batch_size and eval_every must be >= 1".into(),
            ));
        }
        let o = &self.optimizer;
        if !(o.lr > 0.0
            && (0.0..1.0).contains(&o.beta1)
            && (0.0..1.0).contains(&o.beta2)
            && o.eps > 0.0)
        {
            return Err(TrainError::Config("invalid optimizer settings".into()));
        }
        if matches!(self.pos_weight, Some(w) if !(w > 0.0 && w.is_finite())) {
            return Err(TrainError::Config("pos_weight must be positive".into()));
        }
        Ok(())
    }

    pub fn is_trainable(&self, id: ParamId) -> bool {
        match self.stage {
            StageId::Three => ParamId::EOS_HEAD.contains(&id),
            _ => !self.frozen.contains(&id),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrainError {
    Config(String),
    Data(String),
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    StageOrder {
        stage: StageId,
        completed: u8,
    },
    Adapter(AdapterError),
    Numerics(NumericsError),
    /// A loss or gradient went non-finite; carries the last good parameters.
    Diverged {
        step: u64,
        last_good: Box<AdapterParams>,
        toy: Option<Box<ToyDecoderParams>>,
    },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config: {m}"),
            Self::Data(m) => write!(f, "data: {m}"),
            Self::LengthMismatch { what, left, right } => {
                write!(f, "{what}: lengths {left} and {right} differ")
            }
            Self::StageOrder { stage, completed } => write!(
                f,
                "{} needs stage {} completed first (parameters are at stage {completed})",
                stage.name(),
                stage.level() - 1
            ),
            Self::Adapter(e) => write!(f, "adapter: {e}"),
            Self::Numerics(e) => write!(f, "numerics: {e}"),
            Self::Diverged { step, .. } => write!(f, "training diverged at step {step}"),
        }
    }
}

impl core::error::Error for TrainError {}

impl From<AdapterError> for TrainError {
    fn from(e: AdapterError) -> Self {
        Self::Adapter(e)
    }
}

impl From<NumericsError> for TrainError {
    fn from(e: NumericsError) -> Self {
        Self::Numerics(e)
    }
}
