//! Pointwise activations, fully connected layer, pooling, pixel shuffle.

use rand::Rng;

use super::scalar::Scalar;
use super::tensor::{Param, Tensor};
use crate::error::{invalid, shape_mismatch, Result};

/// ReLU with cached mask. Subgradient at 0 is 0.
#[derive(Debug, Clone, Default)]
pub struct Relu {
    mask: Option<Vec<bool>>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward<S: Scalar>(&mut self, x: &Tensor<S>) -> Tensor<S> {
        let mask: Vec<bool> = x.data().iter().map(|v| *v > S::ZERO).collect();
        let mut y = x.clone();
        for (v, m) in y.data_mut().iter_mut().zip(&mask) {
            if !m {
                *v = S::ZERO;
            }
        }
        self.mask = Some(mask);
        y
    }

    pub fn backward<S: Scalar>(&mut self, dy: &Tensor<S>) -> Result<Tensor<S>> {
        let mask = self
            .mask
            .take()
            .ok_or_else(|| invalid("relu backward before forward".to_string()))?;
        let mut dx = dy.clone();
        for (v, m) in dx.data_mut().iter_mut().zip(&mask) {
            if !m {
                *v = S::ZERO;
            }
        }
        Ok(dx)
    }
}

/// Numerically stable logistic sigmoid; caches the output.
#[derive(Debug, Clone, Default)]
pub struct Sigmoid<S: Scalar> {
    out: Option<Tensor<S>>,
}

impl<S: Scalar> Sigmoid<S> {
    pub fn new() -> Self {
        Sigmoid { out: None }
    }

    pub fn forward(&mut self, x: &Tensor<S>) -> Tensor<S> {
        let mut y = x.clone();
        for v in y.data_mut() {
            let xv = v.to_f64();
            let s = if xv >= 0.0 { 1.0 / (1.0 + (-xv).exp()) } else { xv.exp() / (1.0 + xv.exp()) };
            *v = S::from_f64(s);
        }
        self.out = Some(y.clone());
        y
    }

    pub fn backward(&mut self, dy: &Tensor<S>) -> Result<Tensor<S>> {
        let y = self
            .out
            .take()
            .ok_or_else(|| invalid("sigmoid backward before forward".to_string()))?;
        let mut dx = dy.clone();
        for (d, s) in dx.data_mut().iter_mut().zip(y.data()) {
            *d *= *s * (S::ONE - *s);
        }
        Ok(dx)
    }
}

/// Fully connected layer: (B, in) → (B, out).
#[derive(Debug, Clone)]
pub struct Linear<S: Scalar> {
    pub weight: Param<S>, // (out, in)
    pub bias: Option<Param<S>>,
    cache: Option<Tensor<S>>,
}

impl<S: Scalar> Linear<S> {
    pub fn new<R: Rng>(name: &str, fan_in: usize, fan_out: usize, with_bias: bool, rng: &mut R) -> Self {
        let std = (2.0 / fan_in as f64).sqrt();
        let weight = Param::new(format!("{name}.weight"), Tensor::randn(&[fan_out, fan_in], std, rng));
        let bias = with_bias.then(|| Param::new(format!("{name}.bias"), Tensor::zeros(&[fan_out])));
        Linear { weight, bias, cache: None }
    }

    pub fn forward(&mut self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let xs = x.shape();
        let ws = self.weight.value.shape();
        if xs.len() != 2 || xs[1] != ws[1] {
            return Err(shape_mismatch(format!("linear: input {xs:?} vs weight {ws:?}")));
        }
        let (batch, fan_in, fan_out) = (xs[0], ws[1], ws[0]);
        let mut y = Tensor::zeros(&[batch, fan_out]);
        // y = x · Wᵀ
        S::gemm(false, true, batch, fan_in, fan_out, S::ONE, x.data(), self.weight.value.data(), S::ZERO, y.data_mut());
        if let Some(b) = &self.bias {
            for row in y.data_mut().chunks_mut(fan_out) {
                for (v, bv) in row.iter_mut().zip(b.value.data()) {
                    *v += *bv;
                }
            }
        }
        self.cache = Some(x.clone());
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Tensor<S>) -> Result<Tensor<S>> {
        let x = self
            .cache
            .take()
            .ok_or_else(|| invalid("linear backward before forward".to_string()))?;
        let ws = self.weight.value.shape();
        let (fan_out, fan_in) = (ws[0], ws[1]);
        let batch = x.shape()[0];
        if dy.shape() != [batch, fan_out] {
            return Err(shape_mismatch("linear backward: dy shape".to_string()));
        }
        // dW += dyᵀ · x
        let mut dw = Tensor::zeros(&[fan_out, fan_in]);
        S::gemm(true, false, fan_out, batch, fan_in, S::ONE, dy.data(), x.data(), S::ZERO, dw.data_mut());
        self.weight.grad.add_assign(&dw)?;
        if let Some(b) = &mut self.bias {
            for row in dy.data().chunks(fan_out) {
                for (g, v) in b.grad.data_mut().iter_mut().zip(row) {
                    *g += *v;
                }
            }
        }
        // dx = dy · W
        let mut dx = Tensor::zeros(&[batch, fan_in]);
        S::gemm(false, false, batch, fan_out, fan_in, S::ONE, dy.data(), self.weight.value.data(), S::ZERO, dx.data_mut());
        Ok(dx)
    }

    pub fn params(&self) -> Vec<&Param<S>> {
        let mut out = vec![&self.weight];
        if let Some(b) = &self.bias {
            out.push(b);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        let mut out = vec![&mut self.weight];
        if let Some(b) = &mut self.bias {
            out.push(b);
        }
        out
    }
}

/// Non-overlapping k×k average pooling, stride k.
#[derive(Debug, Clone)]
pub struct AvgPool {
    pub k: usize,
    in_shape: Option<Vec<usize>>,
}

impl AvgPool {
    pub fn new(k: usize) -> Self {
        AvgPool { k, in_shape: None }
    }

    pub fn forward<S: Scalar>(&mut self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let xs = x.shape();
        if xs.len() != 4 {
            return Err(shape_mismatch("avg_pool expects 4-D input".to_string()));
        }
        let (b, c, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        if self.k == 0 || h % self.k != 0 || w % self.k != 0 {
            return Err(invalid(format!("avg_pool: {h}x{w} not divisible by {}", self.k)));
        }
        let (oh, ow) = (h / self.k, w / self.k);
        let mut y = Tensor::zeros(&[b, c, oh, ow]);
        let inv = S::from_f64(1.0 / (self.k * self.k) as f64);
        for bi in 0..b {
            for ci in 0..c {
                let x_plane = &x.data()[(bi * c + ci) * h * w..(bi * c + ci + 1) * h * w];
                let y_plane = &mut y.data_mut()[(bi * c + ci) * oh * ow..(bi * c + ci + 1) * oh * ow];
                for r in 0..oh {
                    for cc in 0..ow {
                        let mut acc = S::ZERO;
                        for i in 0..self.k {
                            for j in 0..self.k {
                                acc += x_plane[(r * self.k + i) * w + cc * self.k + j];
                            }
                        }
                        y_plane[r * ow + cc] = acc * inv;
                    }
                }
            }
        }
        self.in_shape = Some(xs.to_vec());
        Ok(y)
    }

    pub fn backward<S: Scalar>(&mut self, dy: &Tensor<S>) -> Result<Tensor<S>> {
        let xs = self
            .in_shape
            .take()
            .ok_or_else(|| invalid("avg_pool backward before forward".to_string()))?;
        let (b, c, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let (oh, ow) = (h / self.k, w / self.k);
        let mut dx = Tensor::zeros(&xs);
        let inv = S::from_f64(1.0 / (self.k * self.k) as f64);
        for bi in 0..b {
            for ci in 0..c {
                let dy_plane = &dy.data()[(bi * c + ci) * oh * ow..(bi * c + ci + 1) * oh * ow];
                let dx_plane = &mut dx.data_mut()[(bi * c + ci) * h * w..(bi * c + ci + 1) * h * w];
                for r in 0..oh {
                    for cc in 0..ow {
                        let g = dy_plane[r * ow + cc] * inv;
                        for i in 0..self.k {
                            for j in 0..self.k {
                                dx_plane[(r * self.k + i) * w + cc * self.k + j] += g;
                            }
                        }
                    }
                }
            }
        }
        Ok(dx)
    }
}

/// Global average pooling: (B, C, H, W) → (B, C).
#[derive(Debug, Clone, Default)]
pub struct GlobalAvgPool {
    in_shape: Option<Vec<usize>>,
}

impl GlobalAvgPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward<S: Scalar>(&mut self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let xs = x.shape();
        if xs.len() != 4 {
            return Err(shape_mismatch("global_avg_pool expects 4-D input".to_string()));
        }
        let (b, c, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let inv = S::from_f64(1.0 / (h * w) as f64);
        let mut y = Tensor::zeros(&[b, c]);
        for bi in 0..b {
            for ci in 0..c {
                let plane = &x.data()[(bi * c + ci) * h * w..(bi * c + ci + 1) * h * w];
                let mut acc = S::ZERO;
                for v in plane {
                    acc += *v;
                }
                y.data_mut()[bi * c + ci] = acc * inv;
            }
        }
        self.in_shape = Some(xs.to_vec());
        Ok(y)
    }

    pub fn backward<S: Scalar>(&mut self, dy: &Tensor<S>) -> Result<Tensor<S>> {
        let xs = self
            .in_shape
            .take()
            .ok_or_else(|| invalid("global_avg_pool backward before forward".to_string()))?;
        let (b, c, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let inv = S::from_f64(1.0 / (h * w) as f64);
        let mut dx = Tensor::zeros(&xs);
        for bi in 0..b {
            for ci in 0..c {
                let g = dy.data()[bi * c + ci] * inv;
                for v in &mut dx.data_mut()[(bi * c + ci) * h * w..(bi * c + ci + 1) * h * w] {
                    *v += g;
                }
            }
        }
        Ok(dx)
    }
}

/// Sub-pixel rearrangement: (B, C·s², H, W) → (B, C, sH, sW) with channel
/// layout `c·s² + dy·s + dx` (dy-major, then dx).
#[derive(Debug, Clone)]
pub struct PixelShuffle {
    pub s: usize,
    in_shape: Option<Vec<usize>>,
}

impl PixelShuffle {
    pub fn new(s: usize) -> Self {
        PixelShuffle { s, in_shape: None }
    }

    pub fn forward<S: Scalar>(&mut self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let xs = x.shape();
        if xs.len() != 4 {
            return Err(shape_mismatch("pixel_shuffle expects 4-D input".to_string()));
        }
        let s = self.s;
        let (b, c_in, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        if s == 0 || c_in % (s * s) != 0 {
            return Err(invalid(format!("pixel_shuffle: channels {c_in} not divisible by {}", s * s)));
        }
        let c_out = c_in / (s * s);
        let mut y = Tensor::zeros(&[b, c_out, h * s, w * s]);
        for bi in 0..b {
            for co in 0..c_out {
                for dy in 0..s {
                    for dx in 0..s {
                        let ci = co * s * s + dy * s + dx;
                        let src = &x.data()[((bi * c_in) + ci) * h * w..((bi * c_in) + ci + 1) * h * w];
                        for r in 0..h {
                            for cc in 0..w {
                                let dst_idx = ((bi * c_out + co) * (h * s) + (r * s + dy)) * (w * s)
                                    + cc * s
                                    + dx;
                                y.data_mut()[dst_idx] = src[r * w + cc];
                            }
                        }
                    }
                }
            }
        }
        self.in_shape = Some(xs.to_vec());
        Ok(y)
    }

    pub fn backward<S: Scalar>(&mut self, dy: &Tensor<S>) -> Result<Tensor<S>> {
        let xs = self
            .in_shape
            .take()
            .ok_or_else(|| invalid("pixel_shuffle backward before forward".to_string()))?;
        let s = self.s;
        let (b, c_in, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let c_out = c_in / (s * s);
        let mut dx = Tensor::zeros(&xs);
        for bi in 0..b {
            for co in 0..c_out {
                for dyo in 0..s {
                    for dxo in 0..s {
                        let ci = co * s * s + dyo * s + dxo;
                        let dst = &mut dx.data_mut()[((bi * c_in) + ci) * h * w..((bi * c_in) + ci + 1) * h * w];
                        for r in 0..h {
                            for cc in 0..w {
                                let src_idx = ((bi * c_out + co) * (h * s) + (r * s + dyo)) * (w * s)
                                    + cc * s
                                    + dxo;
                                dst[r * w + cc] = dy.data()[src_idx];
                            }
                        }
                    }
                }
            }
        }
        Ok(dx)
    }
}
