use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{ConvGeometry, Shape3};

/// One layer of a sequential network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv {
        filters: usize,
        kernel_h: usize,
        kernel_w: usize,
        stride: usize,
        pad: usize,
        /// Excluded from pruning schedules.
        #[serde(default)]
        prune_exempt: bool,
        /// Retained lowered columns, as indices into the full
        /// `C * kernel_h * kernel_w` lowering. `None` keeps every column.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        columns: Option<Vec<usize>>,
    },
    Relu,
    MaxPool {
        size: usize,
        stride: usize,
    },
    FullyConnected {
        out: usize,
    },
    SoftmaxXent,
}

impl LayerSpec {
    pub fn conv(filters: usize, kernel: usize, stride: usize, pad: usize) -> Self {
        Self::Conv {
            filters,
            kernel_h: kernel,
            kernel_w: kernel,
            stride,
            pad,
            prune_exempt: false,
            columns: None,
        }
    }

    pub fn is_parametric(&self) -> bool {
        matches!(self, Self::Conv { .. } | Self::FullyConnected { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Conv { .. } => "conv",
            Self::Relu => "relu",
            Self::MaxPool { .. } => "maxpool",
            Self::FullyConnected { .. } => "fc",
            Self::SoftmaxXent => "softmax_xent",
        }
    }
}

/// Input shape plus an ordered layer list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: Shape3,
    pub layers: Vec<LayerSpec>,
}

/// Shapes flowing into and out of one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerShape {
    pub input: Shape3,
    pub output: Shape3,
    /// Set for convolutions.
    pub geometry: Option<ConvGeometry>,
}

impl Architecture {
    /// Checks chain compatibility and returns per-layer shapes.
    pub fn resolve(&self) -> Result<Vec<LayerShape>> {
        if self.input.is_empty() {
            return Err(Error::Config("empty input shape".into()));
        }
        let mut shape = self.input;
        let mut out = Vec::with_capacity(self.layers.len());
        for (idx, layer) in self.layers.iter().enumerate() {
            let bad = |msg: String| Error::Config(format!("layer {idx} ({}): {msg}", layer.name()));
            let (output, geometry) = match layer {
                LayerSpec::Conv {
                    filters,
                    kernel_h,
                    kernel_w,
                    stride,
                    pad,
                    columns,
                    ..
                } => {
                    let g = ConvGeometry {
                        in_channels: shape.channels,
                        in_h: shape.height,
                        in_w: shape.width,
                        kernel_h: *kernel_h,
                        kernel_w: *kernel_w,
                        stride: *stride,
                        pad: *pad,
                    };
                    g.validate().map_err(|e| bad(e.to_string()))?;
                    if *filters == 0 {
                        return Err(bad("zero filters".into()));
                    }
                    if let Some(cols) = columns {
                        if cols.windows(2).any(|w| w[0] >= w[1]) {
                            return Err(bad("columns must be strictly increasing".into()));
                        }
                        if cols.last().is_some_and(|&c| c >= g.patch_len()) {
                            return Err(bad(format!(
                                "column index beyond lowered width {}",
                                g.patch_len()
                            )));
                        }
                    }
                    (Shape3::new(*filters, g.out_h(), g.out_w()), Some(g))
                }
                LayerSpec::Relu => (shape, None),
                LayerSpec::MaxPool { size, stride } => {
                    if *size == 0 || *stride == 0 {
                        return Err(bad("pool size and stride must be positive".into()));
                    }
                    if shape.height < *size || shape.width < *size {
                        return Err(bad(format!(
                            "pool window {size} larger than {}x{}",
                            shape.height, shape.width
                        )));
                    }
                    (
                        Shape3::new(
                            shape.channels,
                            (shape.height - size) / stride + 1,
                            (shape.width - size) / stride + 1,
                        ),
                        None,
                    )
                }
                LayerSpec::FullyConnected { out } => {
                    if *out == 0 {
                        return Err(bad("zero outputs".into()));
                    }
                    (Shape3::new(*out, 1, 1), None)
                }
                LayerSpec::SoftmaxXent => {
                    if idx + 1 != self.layers.len() {
                        return Err(bad("softmax_xent must be the last layer".into()));
                    }
                    (shape, None)
                }
            };
            out.push(LayerShape {
                input: shape,
                output,
                geometry,
            });
            shape = output;
        }
        Ok(out)
    }

    /// Number of output classes (flattened final activation).
    pub fn classes(&self) -> Result<usize> {
        Ok(self
            .resolve()?
            .last()
            .map_or(self.input.len(), |s| s.output.len()))
    }

    /// Indices of convolution layers in the layer list.
    pub fn conv_layers(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, LayerSpec::Conv { .. }))
            .map(|(i, _)| i)
            .collect()
    }

    /// Convolution layers not flagged `prune_exempt`.
    pub fn prunable_layers(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| {
                matches!(
                    l,
                    LayerSpec::Conv {
                        prune_exempt: false,
                        ..
                    }
                )
            })
            .map(|(i, _)| i)
            .collect()
    }
}
