//! Minimal tensor/layer/optimizer kit with verifiable gradients.
//!
//! Layers cache what their backward pass needs during `forward`; `backward`
//! consumes the cache, accumulates parameter gradients in place, and returns
//! the input gradient. All forward/backward passes are single-threaded and
//! deterministic: identical inputs and parameters produce bitwise-identical
//! outputs at a fixed precision.
//!
//! Convolution here is cross-correlation (no kernel flip), the deep-learning
//! convention; the degradation pipeline's blur uses true convolution. The two
//! coincide for the symmetric Gaussian kernels but are kept distinct.

mod adam;
mod blocks;
pub mod checkpoint;
mod conv;
mod gradcheck;
mod layers;
mod loss;
mod scalar;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use blocks::{BottleneckBlock, ResidualBlock};
pub use checkpoint::{ArrayData, Checkpoint};
pub use conv::{conv2d_backward, conv2d_forward, conv2d_forward_reusing, Conv2d, ConvCache, Padding};
pub use gradcheck::{central_diff_grad, grad_check, max_rel_error};
pub use layers::{AvgPool, GlobalAvgPool, Linear, PixelShuffle, Relu, Sigmoid};
pub use loss::l1_loss;
pub use scalar::Scalar;
pub use tensor::{LayerParams, Param, Tensor};
