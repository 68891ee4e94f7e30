//! Composed blocks: plain residual blocks for the SR trunk, bottleneck
//! residual blocks for the DoT backbone.
//!
//! Layout inside a residual block is conv → ReLU → conv with an identity
//! skip; the closing conv is zero-initialized so a fresh block is the
//! identity map.

use rand::Rng;

use super::conv::{Conv2d, Padding};
use super::layers::Relu;
use super::scalar::Scalar;
use super::tensor::{Param, Tensor};
use crate::error::Result;

/// x + conv2(relu(conv1(x))), all convs 3×3, channel-preserving.
#[derive(Debug, Clone)]
pub struct ResidualBlock<S: Scalar> {
    pub conv1: Conv2d<S>,
    pub relu: Relu,
    pub conv2: Conv2d<S>,
}

impl<S: Scalar> ResidualBlock<S> {
    pub fn new<R: Rng>(name: &str, channels: usize, rng: &mut R) -> Self {
        let conv1 = Conv2d::new(&format!("{name}.conv1"), channels, channels, 3, Padding::Zero, 1, true, rng);
        let conv2 = Conv2d::new(&format!("{name}.conv2"), channels, channels, 3, Padding::Zero, 1, true, rng)
            .zeroed();
        ResidualBlock { conv1, relu: Relu::new(), conv2 }
    }

    pub fn forward(&mut self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let mut y = self.conv2.forward(&self.relu.forward(&self.conv1.forward(x)?))?;
        y.add_assign(x)?;
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Tensor<S>) -> Result<Tensor<S>> {
        let mut dx = self.conv1.backward(&self.relu.backward(&self.conv2.backward(dy)?)?)?;
        dx.add_assign(dy)?;
        Ok(dx)
    }

    pub fn params(&self) -> Vec<&Param<S>> {
        let mut out = self.conv1.params();
        out.extend(self.conv2.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        let mut out = self.conv1.params_mut();
        out.extend(self.conv2.params_mut());
        out
    }
}

/// 1×1-reduce → ReLU → 3×3 → ReLU → 1×1-expand with identity skip.
#[derive(Debug, Clone)]
pub struct BottleneckBlock<S: Scalar> {
    pub reduce: Conv2d<S>,
    relu1: Relu,
    pub conv: Conv2d<S>,
    relu2: Relu,
    pub expand: Conv2d<S>,
}

impl<S: Scalar> BottleneckBlock<S> {
    pub fn new<R: Rng>(name: &str, channels: usize, inner: usize, rng: &mut R) -> Self {
        let reduce = Conv2d::new(&format!("{name}.reduce"), channels, inner, 1, Padding::Zero, 1, true, rng);
        let conv = Conv2d::new(&format!("{name}.conv"), inner, inner, 3, Padding::Zero, 1, true, rng);
        let expand = Conv2d::new(&format!("{name}.expand"), inner, channels, 1, Padding::Zero, 1, true, rng)
            .zeroed();
        BottleneckBlock { reduce, relu1: Relu::new(), conv, relu2: Relu::new(), expand }
    }

    pub fn forward(&mut self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let h = self.relu1.forward(&self.reduce.forward(x)?);
        let h = self.relu2.forward(&self.conv.forward(&h)?);
        let mut y = self.expand.forward(&h)?;
        y.add_assign(x)?;
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Tensor<S>) -> Result<Tensor<S>> {
        let g = self.relu2.backward(&self.expand.backward(dy)?)?;
        let g = self.relu1.backward(&self.conv.backward(&g)?)?;
        let mut dx = self.reduce.backward(&g)?;
        dx.add_assign(dy)?;
        Ok(dx)
    }

    pub fn params(&self) -> Vec<&Param<S>> {
        let mut out = self.reduce.params();
        out.extend(self.conv.params());
        out.extend(self.expand.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        let mut out = self.reduce.params_mut();
        out.extend(self.conv.params_mut());
        out.extend(self.expand.params_mut());
        out
    }
}
