use crate::error::{Error, Result};
use crate::increg::{GroupKind, GroupState};
use crate::nn::{ConvLayer, FcLayer, Layer, LayerSpec, Network};
use crate::scalar::Scalar;


/// What survives in one layer.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerPlan {
    Conv {
        /// Filters kept.
        kept_rows: Vec<usize>,
        /// Kept lowered columns, as indices into this layer's current
        /// column list.
        kept_cols: Vec<usize>,
        /// Input channels still produced upstream.
        kept_in_channels: Vec<usize>,
    },
    FullyConnected {
        kept_inputs: Vec<usize>,
    },
    Passthrough,
}

/// Kept rows/columns for every layer of a sequential network.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactPlan {
    pub layers: Vec<LayerPlan>,
}

impl CompactPlan {
    /// True when nothing is removed anywhere.
    pub fn is_identity<T: Scalar>(&self, net: &Network<T>) -> bool {
        self.layers.iter().zip(net.layers()).all(|(p, l)| match (p, l) {
            (LayerPlan::Conv { kept_rows, kept_cols, kept_in_channels }, Layer::Conv(c)) => {
                kept_rows.len() == c.filters
                    && kept_cols.len() == c.columns.len()
                    && kept_in_channels.len() == c.geometry.in_channels
            }
            (LayerPlan::FullyConnected { kept_inputs }, Layer::FullyConnected(f)) => {
                kept_inputs.len() == f.inputs
            }
            (LayerPlan::Passthrough, _) => true,
            _ => false,
        })
    }
}

/// Derives the kept sets from pruned groups.
///
/// Column groups are layer-local. A pruned filter (row group) also drops
/// the matching input channel of the next convolution, or the matching
/// input features of a following fully-connected layer. A pruned channel
/// group also drops the filter that produces that channel in the previous
/// convolution.
pub fn build_plan<T: Scalar>(net: &Network<T>, groups: &[GroupState]) -> Result<CompactPlan> {
    let n_layers = net.layers().len();
    let mut pruned_rows: Vec<Vec<bool>> = Vec::with_capacity(n_layers);
    let mut pruned_cols: Vec<Vec<bool>> = Vec::with_capacity(n_layers);
    for layer in net.layers() {
        match layer {
            Layer::Conv(c) => {
                pruned_rows.push(vec![false; c.filters]);
                pruned_cols.push(vec![false; c.columns.len()]);
            }
            _ => {
                pruned_rows.push(Vec::new());
                pruned_cols.push(Vec::new());
            }
        }
    }

    for g in groups.iter().filter(|g| g.pruned) {
        let conv = net.conv(g.layer).ok_or_else(|| {
            Error::InconsistentState(format!("pruned group on non-conv layer {}", g.layer))
        })?;
        if !conv.is_dense() {
            return Err(Error::InconsistentState(format!(
                "layer {} is already compacted",
                g.layer
            )));
        }
        let w = conv.weight.as_slice();
        if let Some(&i) = g.members.iter().find(|&&i| i >= w.len() || w[i] != T::zero()) {
            return Err(Error::InconsistentState(format!(
                "group {}:{} is pruned but weight {i} is nonzero",
                g.layer, g.id
            )));
        }
        let k = conv.columns.len();
        match g.kind {
            GroupKind::Row => {
                if conv.bias[g.id] != T::zero() {
                    return Err(Error::InconsistentState(format!(
                        "filter {}:{} is pruned but its bias is nonzero",
                        g.layer, g.id
                    )));
                }
                pruned_rows[g.layer][g.id] = true;
            }
            GroupKind::Column => pruned_cols[g.layer][g.id] = true,
            GroupKind::Channel => {
                let area = conv.geometry.kernel_area();
                let end = ((g.id + 1) * area).min(k);
                pruned_cols[g.layer][g.id * area..end].fill(true);
            }
        }
    }

    // A channel whose every column is removed no longer needs its producer.
    let conv_idx: Vec<usize> = net.architecture().conv_layers();
    let mut dead_out: Vec<Vec<bool>> = pruned_rows.clone();
    for pair in conv_idx.windows(2) {
        let (prev, next) = (pair[0], pair[1]);
        let c = net.conv(next).expect("conv index");
        let adjacent = net.layers()[prev + 1..next]
            .iter()
            .all(|l| matches!(l, Layer::Relu | Layer::MaxPool { .. }));
        if !c.is_dense() || !adjacent {
            continue;
        }
        let area = c.geometry.kernel_area();
        for ch in 0..c.geometry.in_channels {
            if (ch * area..(ch + 1) * area).all(|j| pruned_cols[next][j]) && ch < dead_out[prev].len() {
                dead_out[prev][ch] = true;
            }
        }
    }

    let mut layers = Vec::with_capacity(n_layers);
    // Channels alive at the current point of the chain.
    let mut alive: Vec<bool> = vec![true; net.input_shape().channels];
    for (idx, layer) in net.layers().iter().enumerate() {
        let shape = net.shapes()[idx];
        match layer {
            Layer::Conv(c) => {
                let kept_in_channels: Vec<usize> = (0..alive.len()).filter(|&ch| alive[ch]).collect();
                let kept_cols: Vec<usize> = c
                    .columns
                    .iter()
                    .enumerate()
                    .filter(|&(j, &col)| {
                        let (ch, _, _) = c.geometry.decode(col);
                        !pruned_cols[idx][j] && alive[ch]
                    })
                    .map(|(j, _)| j)
                    .collect();
                let kept_rows: Vec<usize> = (0..c.filters).filter(|&f| !dead_out[idx][f]).collect();
                alive = (0..c.filters).map(|f| !dead_out[idx][f]).collect();
                layers.push(LayerPlan::Conv {
                    kept_rows,
                    kept_cols,
                    kept_in_channels,
                });
            }
            Layer::FullyConnected(f) => {
                let plane = shape.input.height * shape.input.width;
                let kept_inputs = (0..f.inputs).filter(|&i| alive[i / plane]).collect();
                alive = vec![true; f.outputs];
                layers.push(LayerPlan::FullyConnected { kept_inputs });
            }
            _ => layers.push(LayerPlan::Passthrough),
        }
    }
    Ok(CompactPlan { layers })
}

/// Builds a network holding only the kept rows and columns.
pub fn compact<T: Scalar>(net: &Network<T>, plan: &CompactPlan) -> Result<Network<T>> {
    if plan.layers.len() != net.layers().len() {
        return Err(Error::DimMismatch(format!(
            "plan has {} layers, network {}",
            plan.layers.len(),
            net.layers().len()
        )));
    }
    if plan.is_identity(net) {
        return Ok(net.clone());
    }
    let mut arch = net.architecture().clone();
    let mut layers = Vec::with_capacity(net.layers().len());
    for (idx, (lp, layer)) in plan.layers.iter().zip(net.layers()).enumerate() {
        let mismatch = || Error::DimMismatch(format!("plan does not fit layer {idx}"));
        match (lp, layer) {
            (
                LayerPlan::Conv {
                    kept_rows,
                    kept_cols,
                    kept_in_channels,
                },
                Layer::Conv(c),
            ) => {
                if kept_rows.iter().any(|&r| r >= c.filters)
                    || kept_cols.iter().any(|&j| j >= c.columns.len())
                    || kept_in_channels.iter().any(|&ch| ch >= c.geometry.in_channels)
                {
                    return Err(mismatch());
                }
                let mut new_channel = vec![None; c.geometry.in_channels];
                for (n, &ch) in kept_in_channels.iter().enumerate() {
                    new_channel[ch] = Some(n);
                }
                let mut geometry = c.geometry;
                geometry.in_channels = kept_in_channels.len();
                let area = c.geometry.kernel_area();
                let columns = kept_cols
                    .iter()
                    .map(|&j| {
                        let col = c.columns[j];
                        let ch = col / area;
                        new_channel[ch]
                            .map(|n| n * area + col % area)
                            .ok_or_else(mismatch)
                    })
                    .collect::<Result<Vec<usize>>>()?;
                let dense = columns.len() == geometry.patch_len();
                if let Some(LayerSpec::Conv {
                    filters,
                    columns: spec_cols,
                    ..
                }) = arch.layers.get_mut(idx)
                {
                    *filters = kept_rows.len();
                    *spec_cols = (!dense).then(|| columns.clone());
                }
                layers.push(Layer::Conv(ConvLayer {
                    geometry,
                    filters: kept_rows.len(),
                    weight: c.weight.select(kept_rows, kept_cols)?,
                    weight_velocity: c.weight_velocity.select(kept_rows, kept_cols)?,
                    bias: kept_rows.iter().map(|&r| c.bias[r]).collect(),
                    bias_velocity: kept_rows.iter().map(|&r| c.bias_velocity[r]).collect(),
                    columns,
                    prune_exempt: c.prune_exempt,
                }));
            }
            (LayerPlan::FullyConnected { kept_inputs }, Layer::FullyConnected(f)) => {
                if kept_inputs.iter().any(|&i| i >= f.inputs) {
                    return Err(mismatch());
                }
                let rows: Vec<usize> = (0..f.outputs).collect();
                layers.push(Layer::FullyConnected(FcLayer {
                    inputs: kept_inputs.len(),
                    outputs: f.outputs,
                    weight: f.weight.select(&rows, kept_inputs)?,
                    weight_velocity: f.weight_velocity.select(&rows, kept_inputs)?,
                    bias: f.bias.clone(),
                    bias_velocity: f.bias_velocity.clone(),
                }));
            }
            (LayerPlan::Passthrough, l) if !matches!(l, Layer::Conv(_) | Layer::FullyConnected(_)) => {
                layers.push(l.clone());
            }
            _ => return Err(mismatch()),
        }
    }
    Network::from_layers(arch, layers, net.seed())
}

/// Copy of `net` with every pruned group zeroed, the reference the compact
/// network must reproduce.
pub fn masked<T: Scalar>(net: &Network<T>, groups: &[GroupState]) -> Network<T> {
    let mut out = net.clone();
    for g in groups.iter().filter(|g| g.pruned) {
        crate::increg::zero_group(&mut out, g);
    }
    out
}

