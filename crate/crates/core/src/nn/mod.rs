//! Sequential CNNs: forward/backward propagation and momentum SGD with
//! per-group quadratic penalties.

mod arch;
mod network;
pub mod presets;
mod train;

pub use arch::{Architecture, LayerShape, LayerSpec};
pub use network::{
    softmax_xent, softmax_xent_grad, ConvLayer, FcLayer, ForwardCache, Gradients, Layer, Network,
    ParamGrad,
};
pub use train::{
    evaluate, sgd_step, train, train_step, EvalResult, GroupPenalty, LayerPenalty, LrSchedule,
    TrainConfig,
};

#[cfg(test)]
mod tests;
