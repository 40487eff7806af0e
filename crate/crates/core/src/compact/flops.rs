use serde::{Deserialize, Serialize};

use crate::nn::{Layer, Network};
use crate::scalar::Scalar;

/// Forward FLOPs of one layer (multiply-accumulate counted as two).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerFlops {
    pub layer: usize,
    pub kind: String,
    pub flops: u64,
}

/// Per-layer forward FLOPs. Convolutions cost
/// `2 * filters * columns * H_out * W_out`, fully-connected layers
/// `2 * in * out`; activations and pooling are not counted.
pub fn layer_flops<T: Scalar>(net: &Network<T>) -> Vec<LayerFlops> {
    net.layers()
        .iter()
        .enumerate()
        .filter_map(|(idx, l)| match l {
            Layer::Conv(c) => Some(LayerFlops {
                layer: idx,
                kind: "conv".into(),
                flops: 2 * (c.filters * c.columns.len() * c.geometry.spatial()) as u64,
            }),
            Layer::FullyConnected(f) => Some(LayerFlops {
                layer: idx,
                kind: "fc".into(),
                flops: 2 * (f.inputs * f.outputs) as u64,
            }),
            _ => None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopsRow {
    pub layer: usize,
    pub kind: String,
    pub flops_base: u64,
    pub flops_pruned: u64,
}

impl FlopsRow {
    pub fn ratio(&self) -> f64 {
        self.flops_base as f64 / self.flops_pruned as f64
    }
}

/// Baseline versus pruned FLOPs, per layer and in total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopsAccount {
    pub layers: Vec<FlopsRow>,
    pub total_base: u64,
    pub total_pruned: u64,
    pub conv_base: u64,
    pub conv_pruned: u64,
}

impl FlopsAccount {
    /// Pairs layers of two networks with the same layer list.
    pub fn compare<T: Scalar>(base: &Network<T>, pruned: &Network<T>) -> Self {
        let layers: Vec<FlopsRow> = layer_flops(base)
            .into_iter()
            .zip(layer_flops(pruned))
            .map(|(b, p)| {
                debug_assert_eq!(b.layer, p.layer);
                FlopsRow {
                    layer: b.layer,
                    kind: b.kind,
                    flops_base: b.flops,
                    flops_pruned: p.flops,
                }
            })
            .collect();
        let sum = |conv_only: bool, f: fn(&FlopsRow) -> u64| {
            layers
                .iter()
                .filter(|r| !conv_only || r.kind == "conv")
                .map(f)
                .sum::<u64>()
        };
        Self {
            total_base: sum(false, |r| r.flops_base),
            total_pruned: sum(false, |r| r.flops_pruned),
            conv_base: sum(true, |r| r.flops_base),
            conv_pruned: sum(true, |r| r.flops_pruned),
            layers,
        }
    }

    pub fn speedup(&self) -> f64 {
        self.total_base as f64 / self.total_pruned as f64
    }

    pub fn conv_speedup(&self) -> f64 {
        self.conv_base as f64 / self.conv_pruned as f64
    }
}

pub fn gflops(flops: u64) -> f64 {
    flops as f64 / 1e9
}
