//! Mini-batch SGD with classical momentum, gradient clipping and a step-decay
//! learning-rate schedule.

mod optim;
mod run;

pub use optim::{batch_loss, clip_gradients, cm_update, lr_at, ClipReport};
pub use run::{
    prepare_samples, train, train_from, IterationRecord, NoopObserver, Sample, TrainObserver,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::msdcnn::{build_params, LossScale, NetworkSpec, ParamSet};
use crate::nn::Real;

/// How raw gradients are limited before the momentum step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipMode {
    /// Rescale to the threshold only when the joint L2 norm exceeds it.
    #[default]
    Cap,
    /// Always rescale weight gradients and bias gradients separately to the
    /// threshold norm, exactly as the literal update rule reads.
    ExactRescale,
}

/// Which gradient drives each update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradMode {
    /// Mean of per-sample gradients over the batch.
    #[default]
    BatchMean,
    /// Gradient of one uniformly picked batch member.
    SingleSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub momentum: f64,
    pub learning_rate: f64,
    pub decay_factor: f64,
    pub decay_interval: usize,
    pub clip_threshold: f64,
    pub clip_mode: ClipMode,
    pub grad_mode: GradMode,
    pub loss_scale: LossScale,
    /// Emit a checkpoint every this many epochs (0 disables periodic checkpoints).
    pub checkpoint_interval: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            epochs: 300,
            momentum: 0.9,
            learning_rate: 0.1,
            decay_factor: 0.5,
            decay_interval: 60,
            clip_threshold: 0.1,
            clip_mode: ClipMode::Cap,
            grad_mode: GradMode::BatchMean,
            loss_scale: LossScale::Sum,
            checkpoint_interval: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be ≥ 1");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return bad("decay_factor must lie in (0, 1]");
        }
        if self.decay_interval == 0 {
            return bad("decay_interval must be ≥ 1");
        }
        if !(self.clip_threshold > 0.0 && self.clip_threshold.is_finite()) {
            return bad("clip_threshold must be positive");
        }
        Ok(())
    }
}

/// Parameters, momentum buffers and counters of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState<T> {
    pub params: ParamSet<T>,
    pub velocity: ParamSet<T>,
    /// Completed epochs.
    pub epoch: usize,
    /// Completed iterations.
    pub iteration: u64,
    pub lr: f64,
    pub loss_history: Vec<f64>,
}

impl<T: Real> TrainState<T> {
    pub fn new(params: ParamSet<T>, config: &TrainConfig) -> Self {
        let velocity = params.zeros_like();
        Self {
            params,
            velocity,
            epoch: 0,
            iteration: 0,
            lr: lr_at(0, config),
            loss_history: Vec::new(),
        }
    }

    pub fn init(spec: &NetworkSpec, config: &TrainConfig) -> Result<Self> {
        Ok(Self::new(build_params(spec, config.seed)?, config))
    }
}
