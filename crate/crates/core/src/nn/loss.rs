//! Training losses.

use super::scalar::Scalar;
use super::tensor::Tensor;
use crate::error::{shape_mismatch, Result};

/// Mean absolute error and its subgradient w.r.t. `pred` (0 at exact ties).
pub fn l1_loss<S: Scalar>(pred: &Tensor<S>, target: &Tensor<S>) -> Result<(f64, Tensor<S>)> {
    if pred.shape() != target.shape() {
        return Err(shape_mismatch(format!(
            "l1_loss: {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.numel() as f64;
    let inv = S::from_f64(1.0 / n);
    let mut grad = Tensor::zeros(pred.shape());
    let mut total = 0.0;
    for ((p, t), g) in pred.data().iter().zip(target.data()).zip(grad.data_mut()) {
        let d = *p - *t;
        total += d.abs().to_f64();
        *g = if d > S::ZERO {
            inv
        } else if d < S::ZERO {
            -inv
        } else {
            S::ZERO
        };
    }
    Ok((total / n, grad))
}
