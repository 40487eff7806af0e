//! Structured pruning of small convolutional networks by incremental
//! group regularization.
//!
//! The crate holds the numeric core (tensors, im2col lowering, GEMM), a
//! small CNN engine with SGD, the per-group regularization scheduler, the
//! compaction and timing harness, and a 1-D lab for the shrinkage
//! property of a growing L2 penalty.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod compact;
pub mod data;
pub mod error;
pub mod increg;
pub mod nn;
pub mod scalar;
pub mod tensor;
pub mod theorem;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::{Matrix, Shape3, Tensor4};
