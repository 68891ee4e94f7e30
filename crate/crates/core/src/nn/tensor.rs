//! Dense row-major tensors and named trainable parameters.

use rand::Rng;

use super::scalar::Scalar;
use crate::error::{shape_mismatch, Result};
use crate::rng::sample_standard_normal;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S: Scalar> {
    shape: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor { shape: shape.to_vec(), data: vec![S::ZERO; shape.iter().product()] }
    }

    pub fn filled(shape: &[usize], value: S) -> Self {
        Tensor { shape: shape.to_vec(), data: vec![value; shape.iter().product()] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<S>) -> Result<Self> {
        if data.len() != shape.iter().product::<usize>() {
            return Err(shape_mismatch(format!(
                "tensor data length {} does not match shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    /// Gaussian init scaled by `std`.
    pub fn randn<R: Rng>(shape: &[usize], std: f64, rng: &mut R) -> Self {
        let data = (0..shape.iter().product::<usize>())
            .map(|_| S::from_f64(std * sample_standard_normal(rng)))
            .collect();
        Tensor { shape: shape.to_vec(), data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn reshaped(mut self, shape: &[usize]) -> Result<Self> {
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(shape_mismatch(format!(
                "cannot reshape {:?} into {:?}",
                self.shape, shape
            )));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn fill(&mut self, value: S) {
        for v in &mut self.data {
            *v = value;
        }
    }

    pub fn scale(&mut self, s: S) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn add_assign(&mut self, other: &Tensor<S>) -> Result<()> {
        if self.shape != other.shape {
            return Err(shape_mismatch("tensor add: shapes differ".to_string()));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
        Ok(())
    }

    /// a + s·b elementwise.
    pub fn axpy(&self, s: S, other: &Tensor<S>) -> Result<Tensor<S>> {
        if self.shape != other.shape {
            return Err(shape_mismatch("tensor axpy: shapes differ".to_string()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a + s * *b).collect();
        Ok(Tensor { shape: self.shape.clone(), data })
    }

    pub fn max_abs_diff(&self, other: &Tensor<S>) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).abs().to_f64())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite_s())
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.to_f64()).collect()
    }

    pub fn from_f64_slice(shape: &[usize], data: &[f64]) -> Result<Tensor<S>> {
        Tensor::from_vec(shape, data.iter().map(|v| S::from_f64(*v)).collect())
    }

    /// Cast between element types, exact when widening.
    pub fn cast<T: Scalar>(&self) -> Tensor<T> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| T::from_f64(v.to_f64())).collect(),
        }
    }
}

/// A trainable tensor with its gradient slot.
#[derive(Debug, Clone)]
pub struct Param<S: Scalar> {
    pub name: String,
    pub value: Tensor<S>,
    pub grad: Tensor<S>,
}

impl<S: Scalar> Param<S> {
    pub fn new(name: impl Into<String>, value: Tensor<S>) -> Self {
        let grad = Tensor::zeros(value.shape());
        Param { name: name.into(), value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(S::ZERO);
    }
}

/// Value-only view of one layer's parameters: what gets interpolated and
/// persisted.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<S: Scalar> {
    pub weight: Tensor<S>,
    pub bias: Option<Tensor<S>>,
}

impl<S: Scalar> LayerParams<S> {
    pub fn same_shape(&self, other: &LayerParams<S>) -> bool {
        self.weight.shape() == other.weight.shape()
            && match (&self.bias, &other.bias) {
                (Some(a), Some(b)) => a.shape() == b.shape(),
                (None, None) => true,
                _ => false,
            }
    }
}
