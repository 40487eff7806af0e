//! Ready-made architectures.

use super::arch::{Architecture, LayerSpec};
use crate::tensor::Shape3;

/// Two 3x3 convolutions (18 and 27 lowered columns), one max-pool and a
/// classifier, for `2 x 8 x 8` inputs.
pub fn toy(classes: usize) -> Architecture {
    Architecture {
        input: Shape3::new(2, 8, 8),
        layers: vec![
            LayerSpec::conv(3, 3, 1, 1),
            LayerSpec::Relu,
            LayerSpec::conv(3, 3, 1, 1),
            LayerSpec::Relu,
            LayerSpec::MaxPool { size: 2, stride: 2 },
            LayerSpec::FullyConnected { out: classes },
            LayerSpec::SoftmaxXent,
        ],
    }
}

/// Three-convolution CIFAR network in the spirit of the classic "quick"
/// model (32-32-64 filters), one classifier layer, for `3 x 32 x 32`.
///
/// The first kernel is 4x4 so that every conv layer has an even number of
/// lowered columns (48, 800, 800).
pub fn convnet() -> Architecture {
    Architecture {
        input: Shape3::new(3, 32, 32),
        layers: vec![
            LayerSpec::conv(32, 4, 1, 1),
            LayerSpec::Relu,
            LayerSpec::MaxPool { size: 3, stride: 2 },
            LayerSpec::conv(32, 5, 1, 2),
            LayerSpec::Relu,
            LayerSpec::MaxPool { size: 3, stride: 2 },
            LayerSpec::conv(64, 5, 1, 2),
            LayerSpec::Relu,
            LayerSpec::MaxPool { size: 3, stride: 2 },
            LayerSpec::FullyConnected { out: 10 },
            LayerSpec::SoftmaxXent,
        ],
    }
}

/// Looks a preset up by name.
pub fn by_name(name: &str, classes: usize) -> Option<Architecture> {
    match name {
        "toy" => Some(toy(classes)),
        "convnet" => {
            let mut a = convnet();
            if let Some(LayerSpec::FullyConnected { out }) = a.layers.get_mut(9) {
                *out = classes;
            }
            Some(a)
        }
        _ => None,
    }
}
