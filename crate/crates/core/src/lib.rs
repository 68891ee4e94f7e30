//! Transitional learning for blind super-resolution.
//!
//! The crate synthesizes parametric degradations (Gaussian blur, bicubic
//! downsampling, AWGN), constructs analytic transition states between two
//! primary degradations, estimates the degree of transitionality (DoT) of an
//! unknown input with a patch-based regression network, and super-resolves it
//! with a network whose final blocks are rebuilt per sample by interpolating
//! two primary parameter sets. A small training/evaluation harness and a CLI
//! sit on top.

pub mod bridge;
pub mod degradation;
pub mod dotnet;
pub mod error;
pub mod harness;
pub mod imaging;
pub mod nn;
pub mod rng;
pub mod tlsr;
pub mod transitional;

pub use error::{Error, Result};
