use serde::{Deserialize, Serialize};

use super::groups::GroupKind;
use crate::error::{Error, Result};
use crate::nn::{Architecture, LayerSpec};

/// Target pruning ratio for one convolution layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerTarget {
    pub layer: usize,
    pub ratio: f64,
}

/// Inputs of the incremental-regularization pruning loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PruneSchedule {
    pub targets: Vec<LayerTarget>,
    /// Bound `A` on per-update factor increments. `None` means half the
    /// training weight decay.
    pub speed: Option<f64>,
    /// Groups whose L1-norm falls below this are pruned.
    pub epsilon: f64,
    /// Iterations between factor updates.
    pub update_interval: u64,
    pub kind: GroupKind,
    /// Iterations of masked retraining after the target is reached.
    pub retrain_iters: u64,
}

impl Default for PruneSchedule {
    fn default() -> Self {
        Self {
            targets: Vec::new(),
            speed: None,
            epsilon: 1e-5,
            update_interval: 10,
            kind: GroupKind::Column,
            retrain_iters: 0,
        }
    }
}

/// Number of groups to prune: `R * N_g` rounded to nearest, ties up.
pub fn target_count(ratio: f64, n_groups: usize) -> usize {
    (ratio * n_groups as f64 + 0.5).floor() as usize
}

impl PruneSchedule {
    /// Same ratio on every prunable convolution of `arch`.
    pub fn uniform(arch: &Architecture, ratio: f64, kind: GroupKind) -> Self {
        Self {
            targets: arch
                .prunable_layers()
                .into_iter()
                .map(|layer| LayerTarget { layer, ratio })
                .collect(),
            kind,
            ..Self::default()
        }
    }

    pub fn resolved_speed(&self, weight_decay: f64) -> f64 {
        self.speed.unwrap_or(weight_decay / 2.0)
    }

    /// Number of groups of `self.kind` in conv layer `layer` (dense).
    pub fn group_count(&self, arch: &Architecture, layer: usize) -> Result<usize> {
        let shapes = arch.resolve()?;
        match (arch.layers.get(layer), shapes.get(layer)) {
            (Some(LayerSpec::Conv { filters, .. }), Some(s)) => {
                let g = s.geometry.expect("conv geometry");
                Ok(match self.kind {
                    GroupKind::Row => *filters,
                    GroupKind::Column => g.patch_len(),
                    GroupKind::Channel => g.in_channels,
                })
            }
            _ => Err(Error::Config(format!("layer {layer} is not a convolution"))),
        }
    }

    /// Checks the schedule against an architecture and the resolved speed.
    pub fn validate(&self, arch: &Architecture, weight_decay: f64) -> Result<()> {
        let speed = self.resolved_speed(weight_decay);
        if !(speed > 0.0) || !speed.is_finite() {
            return Err(Error::Config(format!(
                "speed A must be positive (got {speed}); set it or use a nonzero weight decay"
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.update_interval == 0 {
            return Err(Error::Config("update_interval must be at least 1".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for t in &self.targets {
            if !seen.insert(t.layer) {
                return Err(Error::Config(format!("layer {} scheduled twice", t.layer)));
            }
            match arch.layers.get(t.layer) {
                Some(LayerSpec::Conv {
                    prune_exempt: false,
                    columns: None,
                    ..
                }) => {}
                Some(LayerSpec::Conv { prune_exempt: true, .. }) => {
                    return Err(Error::Config(format!("layer {} is prune-exempt", t.layer)))
                }
                Some(LayerSpec::Conv { .. }) => {
                    return Err(Error::Config(format!("layer {} is already compacted", t.layer)))
                }
                _ => return Err(Error::Config(format!("layer {} is not a convolution", t.layer))),
            }
            if !(0.0..1.0).contains(&t.ratio) {
                return Err(Error::Config(format!(
                    "ratio {} for layer {} outside [0, 1)",
                    t.ratio, t.layer
                )));
            }
            let n = self.group_count(arch, t.layer)?;
            if target_count(t.ratio, n) >= n {
                return Err(Error::Config(format!(
                    "ratio {} would prune all {n} groups of layer {}",
                    t.ratio, t.layer
                )));
            }
            if t.ratio > 0.0 && !((n as f64 - 1.0) - t.ratio * n as f64 > 0.0) {
                return Err(Error::Config(format!(
                    "ratio {} leaves fewer than two surviving groups of {n} in layer {}",
                    t.ratio, t.layer
                )));
            }
        }
        let missing: Vec<usize> = arch
            .prunable_layers()
            .into_iter()
            .filter(|l| !seen.contains(l))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!(
                "no target for prunable conv layers {missing:?} (use ratio 0 or mark them prune_exempt)"
            )));
        }
        Ok(())
    }
}
