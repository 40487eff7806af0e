use serde::{Deserialize, Serialize};

use super::network::{Gradients, Layer, Network};
use crate::data::{BatchSampler, Dataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LrSchedule {
    Fixed,
    /// Multiply the rate by `factor` every `every` iterations.
    Step { factor: f64, every: u64 },
}

/// SGD hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub base_lr: f64,
    pub momentum: f64,
    /// Non-structured decay applied to every weight.
    pub weight_decay: f64,
    /// Bias decay is `weight_decay * bias_decay_mult`.
    pub bias_decay_mult: f64,
    pub batch_size: usize,
    pub max_iters: u64,
    pub lr_schedule: LrSchedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            base_lr: 0.01,
            momentum: 0.9,
            weight_decay: 5e-4,
            bias_decay_mult: 1.0,
            batch_size: 32,
            max_iters: 2000,
            lr_schedule: LrSchedule::Fixed,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(Error::Config(format!("base_lr must be > 0, got {}", self.base_lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if !(self.weight_decay >= 0.0) || !(self.bias_decay_mult >= 0.0) {
            return Err(Error::Config("weight decay must be nonnegative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if let LrSchedule::Step { factor, every } = self.lr_schedule {
            if every == 0 || !(factor > 0.0) {
                return Err(Error::Config("step schedule needs every > 0 and factor > 0".into()));
            }
        }
        Ok(())
    }

    pub fn lr_at(&self, iteration: u64) -> f64 {
        match self.lr_schedule {
            LrSchedule::Fixed => self.base_lr,
            LrSchedule::Step { factor, every } => {
                self.base_lr * factor.powi((iteration / every) as i32)
            }
        }
    }
}

/// Per-weight structured penalty and prune mask for one convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPenalty<T> {
    /// Group factor of the group owning each lowered weight.
    pub lambda: Vec<T>,
    /// Weights of pruned groups.
    pub pruned: Vec<bool>,
    /// Biases of pruned filters.
    pub pruned_bias: Vec<bool>,
}

/// Structured regularization for a whole network, indexed by layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPenalty<T> {
    pub layers: Vec<Option<LayerPenalty<T>>>,
}

impl<T: Scalar> GroupPenalty<T> {
    /// No group penalty and no masks.
    pub fn none(layers: usize) -> Self {
        Self {
            layers: vec![None; layers],
        }
    }

    fn validate(&self, net: &Network<T>) -> Result<()> {
        if self.layers.len() != net.layers().len() {
            return Err(Error::DimMismatch(format!(
                "penalty covers {} layers, network has {}",
                self.layers.len(),
                net.layers().len()
            )));
        }
        for (idx, (p, layer)) in self.layers.iter().zip(net.layers()).enumerate() {
            let Some(p) = p else { continue };
            let Layer::Conv(c) = layer else {
                return Err(Error::Contract(format!("group penalty on non-conv layer {idx}")));
            };
            let n = c.weight.as_slice().len();
            if p.lambda.len() != n || p.pruned.len() != n || p.pruned_bias.len() != c.filters {
                return Err(Error::DimMismatch(format!("penalty shape for layer {idx}")));
            }
            if let Some(v) = p.lambda.iter().find(|v| !(**v >= T::zero())) {
                return Err(Error::Contract(format!(
                    "negative group factor {v} in layer {idx}"
                )));
            }
        }
        Ok(())
    }
}

/// One momentum-SGD update.
///
/// The effective gradient of a weight `w` in group `g` is
/// `dL/dw + (weight_decay + lambda_g) * w`; velocity is
/// `momentum * v + lr * grad` and `w -= v`. Weights, gradients and
/// velocities of pruned groups are zero afterwards.
pub fn sgd_step<T: Scalar>(
    net: &mut Network<T>,
    grads: &mut Gradients<T>,
    cfg: &TrainConfig,
    iteration: u64,
    penalty: &GroupPenalty<T>,
) -> Result<()> {
    penalty.validate(net)?;
    if grads.layers.len() != net.layers().len() {
        return Err(Error::DimMismatch("gradient/network layer count".into()));
    }
    let lr = T::from_f64(cfg.lr_at(iteration));
    let mu = T::from_f64(cfg.momentum);
    let wd = T::from_f64(cfg.weight_decay);
    let bias_wd = T::from_f64(cfg.weight_decay * cfg.bias_decay_mult);

    for (idx, (layer, grad)) in net.layers_mut().iter_mut().zip(&mut grads.layers).enumerate() {
        let (w, v, b, bv) = match layer {
            Layer::Conv(c) => (
                c.weight.as_mut_slice(),
                c.weight_velocity.as_mut_slice(),
                &mut c.bias[..],
                &mut c.bias_velocity[..],
            ),
            Layer::FullyConnected(f) => (
                f.weight.as_mut_slice(),
                f.weight_velocity.as_mut_slice(),
                &mut f.bias[..],
                &mut f.bias_velocity[..],
            ),
            _ => continue,
        };
        let g = grad
            .as_mut()
            .ok_or_else(|| Error::Contract(format!("missing gradient for layer {idx}")))?;
        if g.weight.len() != w.len() || g.bias.len() != b.len() {
            return Err(Error::DimMismatch(format!("gradient shape for layer {idx}")));
        }
        let pen = penalty.layers[idx].as_ref();
        for i in 0..w.len() {
            let decay = match pen {
                Some(p) => wd + p.lambda[i],
                None => wd,
            };
            let eff = g.weight[i] + decay * w[i];
            v[i] = mu * v[i] + lr * eff;
            w[i] -= v[i];
        }
        for i in 0..b.len() {
            let eff = g.bias[i] + bias_wd * b[i];
            bv[i] = mu * bv[i] + lr * eff;
            b[i] -= bv[i];
        }
        if let Some(p) = pen {
            for (i, _) in p.pruned.iter().enumerate().filter(|(_, &m)| m) {
                w[i] = T::zero();
                v[i] = T::zero();
                g.weight[i] = T::zero();
            }
            for (i, _) in p.pruned_bias.iter().enumerate().filter(|(_, &m)| m) {
                b[i] = T::zero();
                bv[i] = T::zero();
                g.bias[i] = T::zero();
            }
        }
        if w.iter().chain(b.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Contract(format!(
                "non-finite parameter in layer {idx} at iteration {iteration}"
            )));
        }
    }
    Ok(())
}

/// Samples a batch, runs forward/backward and applies [`sgd_step`].
/// Returns the batch loss before the update.
pub fn train_step<T: Scalar>(
    net: &mut Network<T>,
    data: &Dataset,
    sampler: &mut BatchSampler,
    cfg: &TrainConfig,
    iteration: u64,
    penalty: &GroupPenalty<T>,
) -> Result<f64> {
    let idx = sampler.next_batch(cfg.batch_size);
    let (x, y) = data.batch::<T>(&idx)?;
    let (loss, mut grads) = net.loss_and_grad(&x, &y)?;
    sgd_step(net, &mut grads, cfg, iteration, penalty)?;
    Ok(loss.as_f64())
}

/// Accuracy and mean loss over a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub accuracy: f64,
    pub loss: f64,
}

pub fn evaluate<T: Scalar>(net: &Network<T>, data: &Dataset, batch: usize) -> Result<EvalResult> {
    if data.is_empty() {
        return Ok(EvalResult {
            accuracy: 0.0,
            loss: 0.0,
        });
    }
    let mut correct = 0usize;
    let mut loss = 0.0;
    let idx: Vec<usize> = (0..data.len()).collect();
    for chunk in idx.chunks(batch.max(1)) {
        let (x, y) = data.batch::<T>(chunk)?;
        let logits = net.predict(&x)?;
        loss += super::softmax_xent(&logits, &y)?.as_f64() * chunk.len() as f64;
        for (i, &label) in y.iter().enumerate() {
            let row = logits.row(i);
            let pred = row
                .iter()
                .enumerate()
                .fold(0, |best, (j, v)| if *v > row[best] { j } else { best });
            correct += usize::from(pred == label);
        }
    }
    Ok(EvalResult {
        accuracy: correct as f64 / data.len() as f64,
        loss: loss / data.len() as f64,
    })
}

/// Plain training for `iters` iterations starting at `start_iter`.
/// `on_iter` sees `(iteration, loss)` after each step.
#[allow(clippy::too_many_arguments)]
pub fn train<T: Scalar>(
    net: &mut Network<T>,
    data: &Dataset,
    sampler: &mut BatchSampler,
    cfg: &TrainConfig,
    penalty: &GroupPenalty<T>,
    start_iter: u64,
    iters: u64,
    mut on_iter: impl FnMut(u64, f64),
) -> Result<()> {
    cfg.validate()?;
    for it in start_iter..start_iter + iters {
        let loss = train_step(net, data, sampler, cfg, it, penalty)?;
        on_iter(it, loss);
    }
    Ok(())
}
