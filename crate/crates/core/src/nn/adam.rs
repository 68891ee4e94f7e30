//! Adam with bias correction.

use super::scalar::Scalar;
use super::tensor::{Param, Tensor};
use crate::error::{shape_mismatch, Result};

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig { lr, ..Default::default() }
    }
}

/// Optimizer state: first/second moment per parameter plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState<S: Scalar> {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Tensor<S>>,
    v: Vec<Tensor<S>>,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(config: AdamConfig) -> Self {
        AdamState { config, step: 0, m: Vec::new(), v: Vec::new() }
    }

    /// One update over `params`, consuming their accumulated gradients. The
    /// slice must present the same parameters in the same order every step.
    pub fn step(&mut self, params: &mut [&mut Param<S>]) -> Result<()> {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(shape_mismatch(format!(
                "adam: {} parameters, state has {}",
                params.len(),
                self.m.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.config.beta1.powi(t);
        let bc2 = 1.0 - self.config.beta2.powi(t);
        let lr = S::from_f64(self.config.lr);
        let b1 = S::from_f64(self.config.beta1);
        let b2 = S::from_f64(self.config.beta2);
        let one_m_b1 = S::from_f64(1.0 - self.config.beta1);
        let one_m_b2 = S::from_f64(1.0 - self.config.beta2);
        let inv_bc1 = S::from_f64(1.0 / bc1);
        let inv_bc2 = S::from_f64(1.0 / bc2);
        let eps = S::from_f64(self.config.eps);

        for (i, p) in params.iter_mut().enumerate() {
            if p.value.shape() != self.m[i].shape() {
                return Err(shape_mismatch(format!("adam: parameter {} changed shape", p.name)));
            }
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            let g = p.grad.data();
            for (((val, &gi), mi), vi) in
                p.value.data_mut().iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut())
            {
                *mi = b1 * *mi + one_m_b1 * gi;
                *vi = b2 * *vi + one_m_b2 * gi * gi;
                let m_hat = *mi * inv_bc1;
                let v_hat = *vi * inv_bc2;
                *val -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            p.zero_grad();
        }
        Ok(())
    }

    /// Named state arrays for checkpointing: moments keyed by parameter name.
    pub fn export(&self, params: &[&Param<S>]) -> Vec<(String, Tensor<S>)> {
        let mut out = Vec::new();
        for (i, p) in params.iter().enumerate() {
            if i < self.m.len() {
                out.push((format!("adam.m.{}", p.name), self.m[i].clone()));
                out.push((format!("adam.v.{}", p.name), self.v[i].clone()));
            }
        }
        out
    }

    pub fn import(&mut self, params: &[&Param<S>], mut lookup: impl FnMut(&str) -> Option<Tensor<S>>) {
        self.m.clear();
        self.v.clear();
        for p in params {
            self.m.push(
                lookup(&format!("adam.m.{}", p.name)).unwrap_or_else(|| Tensor::zeros(p.value.shape())),
            );
            self.v.push(
                lookup(&format!("adam.v.{}", p.name)).unwrap_or_else(|| Tensor::zeros(p.value.shape())),
            );
        }
    }
}
