use alloc::vec::Vec;

use super::TrainError;

/// Linear teacher-forcing decay `λ(j) = max(ε, k − c·j)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleParams {
    pub epsilon: f64,
    pub k: f64,
    pub c: f64,
}

impl ScheduleParams {
    /// Always teacher forced.
    pub const CONSTANT: ScheduleParams = ScheduleParams {
        epsilon: 1.0,
        k: 1.0,
        c: 0.0,
    };
    pub const STAGE2: ScheduleParams = ScheduleParams {
        epsilon: 0.5,
        k: 1.0,
        c: 8e-6,
    };
    pub const STAGE3: ScheduleParams = ScheduleParams {
        epsilon: 0.0,
        k: 1.0,
        c: 3e-4,
    };

    pub fn validate(&self) -> Result<(), TrainError> {
        if !(0.0 <= self.epsilon && self.epsilon <= self.k && self.k <= 1.0) {
            return Err(TrainError::Config(
                "schedule needs 0 <= epsilon <= k <= 1".into(),
            ));
        }
        if !(self.c >= 0.0) {
            return Err(TrainError::Config("schedule decay c must be >= 0".into()));
        }
        Ok(())
    }
}

pub fn teacher_forcing_ratio(step: u64, s: &ScheduleParams) -> f64 {
    let linear = s.k - s.c * step as f64;
    if linear > s.epsilon {
        linear
    } else {
        s.epsilon
    }
}

/// Where a decoder step takes its input from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputSource {
    /// The learned start vector (always step 1).
    Start,
    /// Ground-truth embedding at this 0-based target index.
    Teacher(usize),
    /// The model's own output at this 0-based step.
    Model(usize),
}

/// Number of leading steps that are teacher forced: `⌈λ·T⌉`. A 1e-9 slack
/// keeps products such as `0.7 × 10` from rounding up past the integer.
pub fn teacher_steps(lambda: f64, len: usize) -> usize {
    let exact = lambda * len as f64;
    (libm::ceil(exact - 1e-9).max(0.0) as usize).min(len)
}

/// Decoder inputs for `steps` steps with a teacher prefix of `⌈λ·T⌉` steps
/// (`T = target_len`). Beyond the target every step is model fed.
pub fn peel_back_inputs(target_len: usize, lambda: f64, steps: usize) -> Vec<InputSource> {
    let prefix = teacher_steps(lambda, target_len);
    (0..steps)
        .map(|i| match i {
            0 => InputSource::Start,
            i if i < prefix => InputSource::Teacher(i - 1),
            i => InputSource::Model(i - 1),
        })
        .collect()
}
