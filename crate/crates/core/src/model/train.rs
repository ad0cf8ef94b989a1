use serde::{Deserialize, Serialize};

use super::encoder::EncoderModel;
use super::loss::nt_xent_loss;
use super::optim::{cosine_lr, Sgd};
use super::tensor::Tensor;
use super::EncoderConfig;
use crate::curation::{CuratorConfig, ViewBatch};
use crate::error::{Error, Result};
use crate::geometry::{AugConfig, SamplingRegime};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub temperature: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub regime: SamplingRegime,
    pub augment: AugConfig,
    pub encoder: EncoderConfig,
    pub curation: Option<CuratorConfig>,
    /// Run K-NN evaluation every this many epochs (and after the last one);
    /// 0 disables it.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            epochs: 500,
            temperature: 0.5,
            learning_rate: 0.06,
            momentum: 0.9,
            weight_decay: 0.0,
            seed: 0,
            regime: SamplingRegime::default(),
            augment: AugConfig::default(),
            encoder: EncoderConfig::default(),
            curation: None,
            eval_every: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::param("temperature", format!("must be > 0, got {}", self.temperature)));
        }
        if self.batch_size < 2 {
            return Err(Error::param("batch_size", format!("must be >= 2, got {}", self.batch_size)));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(Error::param("learning_rate", "must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::param("momentum", "must be in [0, 1)"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::param("weight_decay", "must be >= 0"));
        }
        self.regime.crop.validate()?;
        self.encoder.validate()?;
        if (self.regime.crop.out_size as usize) < self.encoder.min_input_size() {
            return Err(Error::param(
                "out_size",
                format!(
                    "{} is smaller than the encoder minimum {}",
                    self.regime.crop.out_size,
                    self.encoder.min_input_size()
                ),
            ));
        }
        if let Some(c) = &self.curation {
            c.validate()?;
        }
        Ok(())
    }
}

/// One SGD step on a `2N`-view batch. Returns the loss measured before the
/// update. A non-finite loss leaves the model untouched.
pub fn train_step(
    model: &mut EncoderModel<f32>,
    optimizer: &mut Sgd<f32>,
    views: &Tensor<f32>,
    temperature: f64,
    lr: f64,
) -> Result<f32> {
    let (out, cache) = model.forward_train(views)?;
    let (loss, dz) = nt_xent_loss(&out.z, temperature)?;
    if !loss.is_finite() || !dz.all_finite() {
        return Err(Error::NonFiniteLoss {
            step: 0,
            loss: f64::from(loss),
        });
    }
    let grads = model.backward(&cache, &dz)?;
    optimizer.step(model.params_mut(), &grads, lr);
    Ok(loss)
}

/// Model, optimizer state and learning-rate schedule.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub model: EncoderModel<f32>,
    pub optimizer: Sgd<f32>,
    pub temperature: f64,
    pub base_lr: f64,
    pub total_steps: usize,
    pub step: usize,
}

impl Trainer {
    pub fn new(model: EncoderModel<f32>, config: &TrainConfig, total_steps: usize) -> Self {
        Self {
            model,
            optimizer: Sgd::new(config.momentum, config.weight_decay),
            temperature: config.temperature,
            base_lr: config.learning_rate,
            total_steps,
            step: 0,
        }
    }

    pub fn current_lr(&self) -> f64 {
        cosine_lr(self.base_lr, self.step, self.total_steps)
    }

    pub fn train_step(&mut self, batch: &ViewBatch) -> Result<f32> {
        let lr = self.current_lr();
        let loss = train_step(&mut self.model, &mut self.optimizer, &batch.views, self.temperature, lr)
            .map_err(|e| match e {
                Error::NonFiniteLoss { loss, .. } => Error::NonFiniteLoss {
                    step: self.step,
                    loss,
                },
                other => other,
            })?;
        self.step += 1;
        Ok(loss)
    }
}
