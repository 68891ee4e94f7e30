//! 2-D convolution (cross-correlation, stride 1, "same" output size) with an
//! exact backward pass. Implemented as im2col + GEMM; grouped convolution
//! slices the column matrix per group, which keeps the arithmetic identical
//! to independent per-group calls.

use rand::Rng;

use super::scalar::Scalar;
use super::tensor::{LayerParams, Param, Tensor};
use crate::error::{invalid, shape_mismatch, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    Zero,
    Reflect,
}

/// Stashed forward state: input shape and per-sample column matrices. The
/// buffers are recycled across steps to avoid re-zeroing megabytes per call.
#[derive(Debug, Clone, Default)]
pub struct ConvCache<S: Scalar> {
    batch: usize,
    c_in: usize,
    h: usize,
    w: usize,
    padding: Padding,
    groups: usize,
    cols: Vec<S>, // batch × (c_in·k²) × (h·w)
    k: usize,
    scratch: Vec<S>, // dcol workspace for backward
}

impl Default for Padding {
    fn default() -> Self {
        Padding::Zero
    }
}

/// Grow-without-zeroing resize: contents are fully overwritten by the
/// caller, only newly grown tails need initialization.
fn reuse_buffer<S: Scalar>(buf: &mut Vec<S>, len: usize) {
    if buf.len() != len {
        buf.clear();
        buf.resize(len, S::ZERO);
    }
}

fn reflect_src(q: i64, n: i64) -> i64 {
    if q < 0 {
        -q
    } else if q >= n {
        2 * n - 2 - q
    } else {
        q
    }
}

/// Fill `col` (c·k² rows by h·w columns) from one sample.
fn im2col<S: Scalar>(x: &[S], c: usize, h: usize, w: usize, k: usize, padding: Padding, col: &mut [S]) {
    if k == 1 {
        // 1×1 convolution: the column matrix is the sample itself
        col.copy_from_slice(x);
        return;
    }
    let p = (k / 2) as i64;
    let (hi, wi) = (h as i64, w as i64);
    let plane = h * w;
    for ci in 0..c {
        let x_plane = &x[ci * plane..(ci + 1) * plane];
        for dy in 0..k as i64 {
            for dx in 0..k as i64 {
                let row_idx = ci * k * k + (dy as usize) * k + dx as usize;
                let out_row = &mut col[row_idx * plane..(row_idx + 1) * plane];
                for r in 0..hi {
                    let src_r = r + dy - p;
                    let dst = &mut out_row[(r as usize) * w..(r as usize + 1) * w];
                    match padding {
                        Padding::Zero if src_r < 0 || src_r >= hi => {
                            for v in dst.iter_mut() {
                                *v = S::ZERO;
                            }
                        }
                        _ => {
                            let sr = match padding {
                                Padding::Zero => src_r,
                                Padding::Reflect => reflect_src(src_r, hi),
                            } as usize;
                            let src_row = &x_plane[sr * w..(sr + 1) * w];
                            for (cc, v) in dst.iter_mut().enumerate() {
                                let src_c = cc as i64 + dx - p;
                                *v = match padding {
                                    Padding::Zero => {
                                        if src_c < 0 || src_c >= wi {
                                            S::ZERO
                                        } else {
                                            src_row[src_c as usize]
                                        }
                                    }
                                    Padding::Reflect => src_row[reflect_src(src_c, wi) as usize],
                                };
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Scatter-add the column-matrix gradient back onto the input (inverse of
/// [`im2col`] as a linear map).
fn col2im_add<S: Scalar>(
    col: &[S],
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    padding: Padding,
    dx_out: &mut [S],
) {
    if k == 1 {
        for (d, g) in dx_out.iter_mut().zip(col) {
            *d += *g;
        }
        return;
    }
    let p = (k / 2) as i64;
    let (hi, wi) = (h as i64, w as i64);
    let plane = h * w;
    for ci in 0..c {
        let dx_plane = &mut dx_out[ci * plane..(ci + 1) * plane];
        for dy in 0..k as i64 {
            for dxo in 0..k as i64 {
                let row_idx = ci * k * k + (dy as usize) * k + dxo as usize;
                let src_row_all = &col[row_idx * plane..(row_idx + 1) * plane];
                for r in 0..hi {
                    let src_r = r + dy - p;
                    let sr = match padding {
                        Padding::Zero => {
                            if src_r < 0 || src_r >= hi {
                                continue;
                            }
                            src_r
                        }
                        Padding::Reflect => reflect_src(src_r, hi),
                    } as usize;
                    let grad_row = &src_row_all[(r as usize) * w..(r as usize + 1) * w];
                    for (cc, g) in grad_row.iter().enumerate() {
                        let src_c = cc as i64 + dxo - p;
                        match padding {
                            Padding::Zero => {
                                if src_c >= 0 && src_c < wi {
                                    dx_plane[sr * w + src_c as usize] += *g;
                                }
                            }
                            Padding::Reflect => {
                                dx_plane[sr * w + reflect_src(src_c, wi) as usize] += *g;
                            }
                        }
                    }
                }
            }
        }
    }
}

fn check_conv_shapes<S: Scalar>(
    x: &Tensor<S>,
    weight: &Tensor<S>,
    bias: Option<&Tensor<S>>,
    groups: usize,
) -> Result<(usize, usize, usize, usize, usize, usize)> {
    let xs = x.shape();
    if xs.len() != 4 {
        return Err(shape_mismatch(format!("conv2d expects 4-D input, got {xs:?}")));
    }
    let ws = weight.shape();
    if ws.len() != 4 || ws[2] != ws[3] {
        return Err(shape_mismatch(format!("conv2d expects square 4-D weight, got {ws:?}")));
    }
    let (batch, c_in, h, w) = (xs[0], xs[1], xs[2], xs[3]);
    let (c_out, k) = (ws[0], ws[2]);
    if k % 2 == 0 {
        return Err(invalid(format!("conv kernel size must be odd, got {k}")));
    }
    if groups == 0 || c_in % groups != 0 || c_out % groups != 0 {
        return Err(invalid(format!(
            "groups {groups} must divide c_in {c_in} and c_out {c_out}"
        )));
    }
    if ws[1] != c_in / groups {
        return Err(shape_mismatch(format!(
            "weight in-channels {} != c_in/groups {}",
            ws[1],
            c_in / groups
        )));
    }
    if let Some(b) = bias {
        if b.shape() != [c_out] {
            return Err(shape_mismatch(format!("bias shape {:?} != [{c_out}]", b.shape())));
        }
    }
    // reflect indexing needs pad <= dim-1; enforce uniformly
    if h == 0 || w == 0 || k / 2 > h - 1 || k / 2 > w - 1 {
        return Err(invalid(format!("kernel {k} too large for {h}x{w} input")));
    }
    Ok((batch, c_in, h, w, c_out, k))
}

/// Forward convolution. Returns the output and the cache needed by
/// [`conv2d_backward`].
pub fn conv2d_forward<S: Scalar>(
    x: &Tensor<S>,
    weight: &Tensor<S>,
    bias: Option<&Tensor<S>>,
    padding: Padding,
    groups: usize,
) -> Result<(Tensor<S>, ConvCache<S>)> {
    conv2d_forward_reusing(x, weight, bias, padding, groups, None)
}

/// Forward convolution recycling a previous cache's buffers.
pub fn conv2d_forward_reusing<S: Scalar>(
    x: &Tensor<S>,
    weight: &Tensor<S>,
    bias: Option<&Tensor<S>>,
    padding: Padding,
    groups: usize,
    prev: Option<ConvCache<S>>,
) -> Result<(Tensor<S>, ConvCache<S>)> {
    let (batch, c_in, h, w, c_out, k) = check_conv_shapes(x, weight, bias, groups)?;
    let plane = h * w;
    let col_rows = c_in * k * k;
    let (mut cols, scratch) = match prev {
        Some(cache) => (cache.cols, cache.scratch),
        None => (Vec::new(), Vec::new()),
    };
    reuse_buffer(&mut cols, batch * col_rows * plane);
    let mut y = Tensor::zeros(&[batch, c_out, h, w]);

    let ci_g = c_in / groups;
    let co_g = c_out / groups;
    let w_slice = weight.data();
    for b in 0..batch {
        let x_s = &x.data()[b * c_in * plane..(b + 1) * c_in * plane];
        let col = &mut cols[b * col_rows * plane..(b + 1) * col_rows * plane];
        im2col(x_s, c_in, h, w, k, padding, col);
        let y_s = &mut y.data_mut()[b * c_out * plane..(b + 1) * c_out * plane];
        for g in 0..groups {
            let wg = &w_slice[g * co_g * ci_g * k * k..(g + 1) * co_g * ci_g * k * k];
            let col_g = &col[g * ci_g * k * k * plane..(g + 1) * ci_g * k * k * plane];
            let y_g = &mut y_s[g * co_g * plane..(g + 1) * co_g * plane];
            S::gemm(false, false, co_g, ci_g * k * k, plane, S::ONE, wg, col_g, S::ZERO, y_g);
        }
        if let Some(bias) = bias {
            for oc in 0..c_out {
                let bv = bias.data()[oc];
                for v in &mut y_s[oc * plane..(oc + 1) * plane] {
                    *v += bv;
                }
            }
        }
    }
    Ok((y, ConvCache { batch, c_in, h, w, padding, groups, cols, k, scratch }))
}

/// Gradients w.r.t. input, weight and bias given the upstream gradient.
pub fn conv2d_backward<S: Scalar>(
    cache: &mut ConvCache<S>,
    weight: &Tensor<S>,
    dy: &Tensor<S>,
) -> Result<(Tensor<S>, Tensor<S>, Tensor<S>)> {
    let (batch, c_in, h, w) = (cache.batch, cache.c_in, cache.h, cache.w);
    let (k, groups) = (cache.k, cache.groups);
    let ws = weight.shape();
    let c_out = ws[0];
    if dy.shape() != [batch, c_out, h, w] {
        return Err(shape_mismatch(format!(
            "conv2d_backward: dy shape {:?} != [{batch}, {c_out}, {h}, {w}]",
            dy.shape()
        )));
    }
    let plane = h * w;
    let col_rows = c_in * k * k;
    let ci_g = c_in / groups;
    let co_g = c_out / groups;

    let mut dx = Tensor::zeros(&[batch, c_in, h, w]);
    let mut dw = Tensor::zeros(ws);
    let mut db = Tensor::zeros(&[c_out]);
    let mut dcol = std::mem::take(&mut cache.scratch);
    reuse_buffer(&mut dcol, col_rows * plane);

    for b in 0..batch {
        let dy_s = &dy.data()[b * c_out * plane..(b + 1) * c_out * plane];
        let col = &cache.cols[b * col_rows * plane..(b + 1) * col_rows * plane];
        for g in 0..groups {
            let dy_g = &dy_s[g * co_g * plane..(g + 1) * co_g * plane];
            let col_g = &col[g * ci_g * k * k * plane..(g + 1) * ci_g * k * k * plane];
            let dw_g = &mut dw.data_mut()[g * co_g * ci_g * k * k..(g + 1) * co_g * ci_g * k * k];
            // dW += dY · colᵀ  (accumulates across the batch)
            S::gemm(false, true, co_g, plane, ci_g * k * k, S::ONE, dy_g, col_g, S::ONE, dw_g);
            // dcol = Wᵀ · dY
            let wg = &weight.data()[g * co_g * ci_g * k * k..(g + 1) * co_g * ci_g * k * k];
            let dcol_g = &mut dcol[g * ci_g * k * k * plane..(g + 1) * ci_g * k * k * plane];
            S::gemm(true, false, ci_g * k * k, co_g, plane, S::ONE, wg, dy_g, S::ZERO, dcol_g);
        }
        let dx_s = &mut dx.data_mut()[b * c_in * plane..(b + 1) * c_in * plane];
        col2im_add(&dcol, c_in, h, w, k, cache.padding, dx_s);
        for oc in 0..c_out {
            let mut acc = S::ZERO;
            for v in &dy_s[oc * plane..(oc + 1) * plane] {
                acc += *v;
            }
            db.data_mut()[oc] += acc;
        }
    }
    cache.scratch = dcol;
    Ok((dx, dw, db))
}

/// Convolution layer owning its parameters.
#[derive(Debug, Clone)]
pub struct Conv2d<S: Scalar> {
    pub weight: Param<S>,
    pub bias: Option<Param<S>>,
    pub padding: Padding,
    pub groups: usize,
    cache: Option<ConvCache<S>>,
    /// Retired cache whose buffers the next forward pass recycles.
    spare: Option<ConvCache<S>>,
}

impl<S: Scalar> Conv2d<S> {
    /// Kaiming fan-in init; `name` prefixes the parameter names.
    pub fn new<R: Rng>(
        name: &str,
        c_in: usize,
        c_out: usize,
        k: usize,
        padding: Padding,
        groups: usize,
        with_bias: bool,
        rng: &mut R,
    ) -> Self {
        let fan_in = (c_in / groups) * k * k;
        let std = (2.0 / fan_in as f64).sqrt();
        let weight = Param::new(
            format!("{name}.weight"),
            Tensor::randn(&[c_out, c_in / groups, k, k], std, rng),
        );
        let bias = with_bias
            .then(|| Param::new(format!("{name}.bias"), Tensor::zeros(&[c_out])));
        Conv2d { weight, bias, padding, groups, cache: None, spare: None }
    }

    /// Zero the weights (and bias): used for the last conv of residual blocks
    /// so freshly initialized blocks start as the identity.
    pub fn zeroed(mut self) -> Self {
        self.weight.value.fill(S::ZERO);
        if let Some(b) = &mut self.bias {
            b.value.fill(S::ZERO);
        }
        self
    }

    pub fn forward(&mut self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let prev = self.cache.take().or_else(|| self.spare.take());
        let (y, cache) = conv2d_forward_reusing(
            x,
            &self.weight.value,
            self.bias.as_ref().map(|b| &b.value),
            self.padding,
            self.groups,
            prev,
        )?;
        self.cache = Some(cache);
        Ok(y)
    }

    /// Accumulates parameter gradients, returns dx.
    pub fn backward(&mut self, dy: &Tensor<S>) -> Result<Tensor<S>> {
        let mut cache = self
            .cache
            .take()
            .ok_or_else(|| invalid("conv2d backward called before forward".to_string()))?;
        let (dx, dw, db) = conv2d_backward(&mut cache, &self.weight.value, dy)?;
        self.spare = Some(cache);
        self.weight.grad.add_assign(&dw)?;
        if let Some(b) = &mut self.bias {
            b.grad.add_assign(&db)?;
        }
        Ok(dx)
    }

    pub fn layer_params(&self) -> LayerParams<S> {
        LayerParams {
            weight: self.weight.value.clone(),
            bias: self.bias.as_ref().map(|b| b.value.clone()),
        }
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
