//! The full SR network and its training/inference entry points.
//!
//! Architecture: subtract dataset mean → shallow conv → n parameter-shared
//! residual blocks (homogeneous features, with a global skip) → m
//! transitional residual blocks driven by per-sample τ → sub-pixel upscaling
//! → output conv → add mean.

mod config;
mod infer;
mod model;
mod train;

pub use config::TlsrConfig;
pub use infer::{tlsr_infer, tlsr_real};
pub use model::TlsrModel;
pub use train::{tlsr_train, TrainLog};
