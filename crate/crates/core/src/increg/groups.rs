use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{GroupPenalty, LayerPenalty, Network};
use crate::scalar::Scalar;

/// Which structure of the lowered kernel is pruned atomically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    /// One row of the lowered kernel, i.e. one filter.
    Row,
    /// One lowered column: a `(channel, kh, kw)` position across filters.
    Column,
    /// The `H_k * W_k` adjacent columns of one input channel.
    Channel,
}

impl std::fmt::Display for GroupKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Row => "row",
            Self::Column => "column",
            Self::Channel => "channel",
        })
    }
}

impl std::str::FromStr for GroupKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row" | "filter" => Ok(Self::Row),
            "column" | "shape" => Ok(Self::Column),
            "channel" => Ok(Self::Channel),
            other => Err(Error::Config(format!("unknown group kind {other:?}"))),
        }
    }
}

/// One weight group of a convolution layer and its scheduler state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupState {
    pub layer: usize,
    /// Index of the group within its layer.
    pub id: usize,
    pub kind: GroupKind,
    /// Flat indices into the layer's lowered weight matrix.
    pub members: Vec<usize>,
    /// Regularization factor of this group; never negative.
    pub lambda: f64,
    pub rank_sum: f64,
    pub rank_count: u64,
    pub pruned: bool,
    /// Iteration count at which the group was pruned.
    pub pruned_at: Option<u64>,
    /// Cached L1-norm of the members.
    pub l1: f64,
}

impl GroupState {
    pub fn new(layer: usize, id: usize, kind: GroupKind, members: Vec<usize>) -> Self {
        Self {
            layer,
            id,
            kind,
            members,
            lambda: 0.0,
            rank_sum: 0.0,
            rank_count: 0,
            pruned: false,
            pruned_at: None,
            l1: 0.0,
        }
    }

    /// Running mean of the instantaneous ranks seen so far.
    pub fn avg_rank(&self) -> Option<f64> {
        (self.rank_count > 0).then(|| self.rank_sum / self.rank_count as f64)
    }
}

/// Partitions a dense convolution's lowered kernel into groups.
pub fn build_groups<T: Scalar>(
    net: &Network<T>,
    layer: usize,
    kind: GroupKind,
) -> Result<Vec<GroupState>> {
    let conv = net
        .conv(layer)
        .ok_or_else(|| Error::Config(format!("layer {layer} is not a convolution")))?;
    if !conv.is_dense() {
        return Err(Error::Config(format!(
            "layer {layer} is already compacted; groups are defined on dense kernels"
        )));
    }
    let (rows, cols) = (conv.filters, conv.columns.len());
    let area = conv.geometry.kernel_area();
    let groups = match kind {
        GroupKind::Row => (0..rows)
            .map(|f| GroupState::new(layer, f, kind, (f * cols..(f + 1) * cols).collect()))
            .collect(),
        GroupKind::Column => (0..cols)
            .map(|j| GroupState::new(layer, j, kind, (0..rows).map(|f| f * cols + j).collect()))
            .collect(),
        GroupKind::Channel => (0..conv.geometry.in_channels)
            .map(|c| {
                let members = (0..rows)
                    .flat_map(|f| (c * area..(c + 1) * area).map(move |j| f * cols + j))
                    .collect();
                GroupState::new(layer, c, kind, members)
            })
            .collect(),
    };
    Ok(groups)
}

/// Recomputes every group's cached L1-norm from the network weights.
pub fn refresh_l1<T: Scalar>(net: &Network<T>, groups: &mut [GroupState]) {
    for g in groups {
        let w = net
            .conv(g.layer)
            .expect("groups refer to convolution layers")
            .weight
            .as_slice();
        g.l1 = g.members.iter().map(|&i| w[i].as_f64().abs()).sum();
    }
}

/// Zeroes a group's weights and momentum; for filters also the bias.
pub fn zero_group<T: Scalar>(net: &mut Network<T>, g: &GroupState) {
    let conv = net
        .conv_mut(g.layer)
        .expect("groups refer to convolution layers");
    let (w, v) = (conv.weight.as_mut_slice(), conv.weight_velocity.as_mut_slice());
    for &i in &g.members {
        w[i] = T::zero();
        v[i] = T::zero();
    }
    if g.kind == GroupKind::Row {
        conv.bias[g.id] = T::zero();
        conv.bias_velocity[g.id] = T::zero();
    }
}

/// Expands group factors and prune flags into per-weight arrays.
pub fn penalty_from_groups<T: Scalar>(
    net: &Network<T>,
    groups: &[GroupState],
) -> Result<GroupPenalty<T>> {
    let mut penalty = GroupPenalty::none(net.layers().len());
    for g in groups {
        let conv = net
            .conv(g.layer)
            .ok_or_else(|| Error::Config(format!("group on non-conv layer {}", g.layer)))?;
        if g.lambda < 0.0 || !g.lambda.is_finite() {
            return Err(Error::Contract(format!(
                "group {}:{} has factor {}",
                g.layer, g.id, g.lambda
            )));
        }
        let n = conv.weight.as_slice().len();
        let p = penalty.layers[g.layer].get_or_insert_with(|| LayerPenalty {
            lambda: vec![T::zero(); n],
            pruned: vec![false; n],
            pruned_bias: vec![false; conv.filters],
        });
        let lambda = T::from_f64(g.lambda);
        for &i in &g.members {
            if i >= n {
                return Err(Error::IndexOutOfRange {
                    what: "group member",
                    index: i,
                    len: n,
                });
            }
            p.lambda[i] = lambda;
            p.pruned[i] = g.pruned;
        }
        if g.pruned && g.kind == GroupKind::Row {
            p.pruned_bias[g.id] = true;
        }
    }
    Ok(penalty)
}
