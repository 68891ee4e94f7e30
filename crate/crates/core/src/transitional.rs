//! Per-sample network interpolation.
//!
//! A transitional layer carries two primary parameter sets (Θ⁰, Θ¹) and is
//! applied with a per-sample τ: sample b runs under the interpolated weights
//! `(1−τ_b)·Θ⁰ + τ_b·Θ¹` (canonical orientation: τ = 1 selects the
//! strong-degradation primary). The whole batch executes as one grouped
//! convolution with `groups = B`, which is arithmetic-for-arithmetic the same
//! as looping over samples.
//!
//! [`bilinear_expansion_residual`] checks the exact bilinear identity for a
//! single linear conv — there the τ weighting follows the original
//! formulation (τ on Θ⁰ and x⁰).

use rand::Rng;

use crate::degradation::DoT;
use crate::error::{invalid, shape_mismatch, Result};
use crate::nn::{
    conv2d_backward, conv2d_forward, ConvCache, LayerParams, Padding, Param, Relu, Tensor,
    Scalar,
};

/// Paired primary parameter sets of one layer.
#[derive(Debug, Clone)]
pub struct TransitionalParams<S: Scalar> {
    pub theta0: LayerParams<S>,
    pub theta1: LayerParams<S>,
}

impl<S: Scalar> TransitionalParams<S> {
    pub fn new(theta0: LayerParams<S>, theta1: LayerParams<S>) -> Result<Self> {
        if !theta0.same_shape(&theta1) {
            return Err(shape_mismatch("transitional params: shapes differ".to_string()));
        }
        Ok(TransitionalParams { theta0, theta1 })
    }
}

/// Θᵗ = (1−τ)·Θ⁰ + τ·Θ¹ over weights and biases. Endpoints return the
/// primary set unchanged (bitwise).
pub fn interpolate_params<S: Scalar>(
    tp: &TransitionalParams<S>,
    tau: DoT,
) -> LayerParams<S> {
    let t = tau.value();
    if t == 0.0 {
        return tp.theta0.clone();
    }
    if t == 1.0 {
        return tp.theta1.clone();
    }
    let ts = S::from_f64(t);
    let one_m = S::from_f64(1.0 - t);
    let weight = blend(&tp.theta0.weight, &tp.theta1.weight, one_m, ts);
    let bias = match (&tp.theta0.bias, &tp.theta1.bias) {
        (Some(a), Some(b)) => Some(blend(a, b, one_m, ts)),
        _ => None,
    };
    LayerParams { weight, bias }
}

fn blend<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>, wa: S, wb: S) -> Tensor<S> {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| wa * *x + wb * *y).collect();
    Tensor::from_vec(a.shape(), data).unwrap()
}

/// Convolution layer with two primary parameter sets, driven by per-sample τ.
#[derive(Debug, Clone)]
pub struct TransitionalConv2d<S: Scalar> {
    pub weight0: Param<S>,
    pub weight1: Param<S>,
    pub bias0: Option<Param<S>>,
    pub bias1: Option<Param<S>>,
    pub padding: Padding,
    cache: Option<TransitionalCache<S>>,
    spare: Option<TransitionalCache<S>>,
}

#[derive(Debug, Clone)]
struct TransitionalCache<S: Scalar> {
    conv: ConvCache<S>,
    stacked_weight: Tensor<S>,
    taus: Vec<S>,
    batch: usize,
    out_shape: Vec<usize>,
}

impl<S: Scalar> TransitionalConv2d<S> {
    pub fn new<R: Rng>(
        name: &str,
        c_in: usize,
        c_out: usize,
        k: usize,
        padding: Padding,
        with_bias: bool,
        rng: &mut R,
    ) -> Self {
        let fan_in = c_in * k * k;
        let std = (2.0 / fan_in as f64).sqrt();
        let weight0 =
            Param::new(format!("{name}.theta0.weight"), Tensor::randn(&[c_out, c_in, k, k], std, rng));
        let weight1 =
            Param::new(format!("{name}.theta1.weight"), Tensor::randn(&[c_out, c_in, k, k], std, rng));
        let bias0 =
            with_bias.then(|| Param::new(format!("{name}.theta0.bias"), Tensor::zeros(&[c_out])));
        let bias1 =
            with_bias.then(|| Param::new(format!("{name}.theta1.bias"), Tensor::zeros(&[c_out])));
        TransitionalConv2d { weight0, weight1, bias0, bias1, padding, cache: None, spare: None }
    }

    /// Zero both primaries (for closing convs of residual blocks).
    pub fn zeroed(mut self) -> Self {
        self.weight0.value.fill(S::ZERO);
        self.weight1.value.fill(S::ZERO);
        if let Some(b) = &mut self.bias0 {
            b.value.fill(S::ZERO);
        }
        if let Some(b) = &mut self.bias1 {
            b.value.fill(S::ZERO);
        }
        self
    }

    pub fn transitional_params(&self) -> TransitionalParams<S> {
        TransitionalParams {
            theta0: LayerParams {
                weight: self.weight0.value.clone(),
                bias: self.bias0.as_ref().map(|b| b.value.clone()),
            },
            theta1: LayerParams {
                weight: self.weight1.value.clone(),
                bias: self.bias1.as_ref().map(|b| b.value.clone()),
            },
        }
    }

    fn interpolated(&self, tau: S) -> (Tensor<S>, Option<Tensor<S>>) {
        let tp = self.transitional_params();
        let p = interpolate_params(&tp, DoT::clamped(tau.to_f64()));
        (p.weight, p.bias)
    }

    /// Apply sample `b` under `interpolate(τ_b)` for the whole batch at once:
    /// per-sample interpolated kernels are stacked into one grouped
    /// convolution with `groups = B`.
    pub fn forward(&mut self, x: &Tensor<S>, taus: &[S]) -> Result<Tensor<S>> {
        let xs = x.shape().to_vec();
        if xs.len() != 4 {
            return Err(shape_mismatch("transitional conv expects 4-D input".to_string()));
        }
        let batch = xs[0];
        if taus.len() != batch {
            return Err(invalid(format!("{} taus for batch {batch}", taus.len())));
        }
        let ws = self.weight0.value.shape().to_vec(); // (c_out, c_in, k, k)
        let (c_out, c_in, k) = (ws[0], ws[1], ws[2]);
        if xs[1] != c_in {
            return Err(shape_mismatch(format!("input channels {} != {c_in}", xs[1])));
        }

        // stack interpolated weights: (B·c_out, c_in, k, k), recycling the
        // previous step's buffers
        let retired = self.cache.take().or_else(|| self.spare.take());
        let (mut stacked_w, prev_conv) = match retired {
            Some(c) if c.stacked_weight.shape() == [batch * c_out, c_in, k, k] => {
                (c.stacked_weight, Some(c.conv))
            }
            Some(c) => (Tensor::zeros(&[batch * c_out, c_in, k, k]), Some(c.conv)),
            None => (Tensor::zeros(&[batch * c_out, c_in, k, k]), None),
        };
        let mut stacked_b = self.bias0.as_ref().map(|_| Tensor::zeros(&[batch * c_out]));
        let per = c_out * c_in * k * k;
        for (b, &tau) in taus.iter().enumerate() {
            let (w, bias) = self.interpolated(tau);
            stacked_w.data_mut()[b * per..(b + 1) * per].copy_from_slice(w.data());
            if let (Some(sb), Some(bv)) = (&mut stacked_b, bias) {
                sb.data_mut()[b * c_out..(b + 1) * c_out].copy_from_slice(bv.data());
            }
        }

        let x_flat = x.clone().reshaped(&[1, batch * c_in, xs[2], xs[3]])?;
        let (y, conv) = crate::nn::conv2d_forward_reusing(
            &x_flat,
            &stacked_w,
            stacked_b.as_ref(),
            self.padding,
            batch,
            prev_conv,
        )?;
        let out_shape = vec![batch, c_out, xs[2], xs[3]];
        let y = y.reshaped(&out_shape)?;
        self.cache = Some(TransitionalCache {
            conv,
            stacked_weight: stacked_w,
            taus: taus.to_vec(),
            batch,
            out_shape,
        });
        Ok(y)
    }

    /// Backward: accumulates gradients on both primaries, returns the input
    /// gradient and per-sample dL/dτ_b. Since sample b's effective weight is
    /// linear in τ_b, dL/dτ_b = ⟨dW_b, Θ¹−Θ⁰⟩ (+ the bias term).
    pub fn backward(&mut self, dy: &Tensor<S>) -> Result<(Tensor<S>, Vec<S>)> {
        let mut cache = self
            .cache
            .take()
            .ok_or_else(|| invalid("transitional backward before forward".to_string()))?;
        if dy.shape() != cache.out_shape.as_slice() {
            return Err(shape_mismatch("transitional backward: dy shape".to_string()));
        }
        let batch = cache.batch;
        let ws = self.weight0.value.shape().to_vec();
        let (c_out, c_in, k) = (ws[0], ws[1], ws[2]);
        let per = c_out * c_in * k * k;
        let (h, w) = (cache.out_shape[2], cache.out_shape[3]);

        let dy_flat = dy.clone().reshaped(&[1, batch * c_out, h, w])?;
        let (dx_flat, dw_stacked, db_stacked) =
            conv2d_backward(&mut cache.conv, &cache.stacked_weight, &dy_flat)?;
        let dx = dx_flat.reshaped(&[batch, c_in, h, w])?;

        let w0 = self.weight0.value.data().to_vec();
        let w1 = self.weight1.value.data().to_vec();
        let mut dtaus = vec![S::ZERO; batch];
        for (b, dtau) in dtaus.iter_mut().enumerate() {
            let t = cache.taus[b];
            let one_m = S::ONE - t;
            let dw_b = &dw_stacked.data()[b * per..(b + 1) * per];
            let g0 = self.weight0.grad.data_mut();
            for (i, g) in dw_b.iter().enumerate() {
                g0[i] += one_m * *g;
            }
            let g1 = self.weight1.grad.data_mut();
            for (i, g) in dw_b.iter().enumerate() {
                g1[i] += t * *g;
            }
            let mut acc = S::ZERO;
            for (i, g) in dw_b.iter().enumerate() {
                acc += *g * (w1[i] - w0[i]);
            }
            if let (Some(b0), Some(b1)) = (&mut self.bias0, &mut self.bias1) {
                let db_b = &db_stacked.data()[b * c_out..(b + 1) * c_out];
                for (i, g) in db_b.iter().enumerate() {
                    b0.grad.data_mut()[i] += one_m * *g;
                    b1.grad.data_mut()[i] += t * *g;
                    acc += *g * (b1.value.data()[i] - b0.value.data()[i]);
                }
            }
            *dtau = acc;
        }
        self.spare = Some(cache);
        Ok((dx, dtaus))
    }

    pub fn params(&self) -> Vec<&Param<S>> {
        let mut out = vec![&self.weight0, &self.weight1];
        if let Some(b) = &self.bias0 {
            out.push(b);
        }
        if let Some(b) = &self.bias1 {
            out.push(b);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        let mut out = vec![&mut self.weight0, &mut self.weight1];
        if let Some(b) = &mut self.bias0 {
            out.push(b);
        }
        if let Some(b) = &mut self.bias1 {
            out.push(b);
        }
        out
    }
}

/// Residual block where both convs are transitional.
#[derive(Debug, Clone)]
pub struct TransitionalBlock<S: Scalar> {
    pub conv1: TransitionalConv2d<S>,
    relu: Relu,
    pub conv2: TransitionalConv2d<S>,
}

impl<S: Scalar> TransitionalBlock<S> {
    pub fn new<R: Rng>(name: &str, channels: usize, rng: &mut R) -> Self {
        let conv1 = TransitionalConv2d::new(
            &format!("{name}.conv1"),
            channels,
            channels,
            3,
            Padding::Zero,
            true,
            rng,
        );
        let conv2 = TransitionalConv2d::new(
            &format!("{name}.conv2"),
            channels,
            channels,
            3,
            Padding::Zero,
            true,
            rng,
        )
        .zeroed();
        TransitionalBlock { conv1, relu: Relu::new(), conv2 }
    }

    pub fn forward(&mut self, x: &Tensor<S>, taus: &[S]) -> Result<Tensor<S>> {
        let h = self.relu.forward(&self.conv1.forward(x, taus)?);
        let mut y = self.conv2.forward(&h, taus)?;
        y.add_assign(x)?;
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Tensor<S>) -> Result<(Tensor<S>, Vec<S>)> {
        let (dh, dt2) = self.conv2.backward(dy)?;
        let (mut dx, dt1) = self.conv1.backward(&self.relu.backward(&dh)?)?;
        dx.add_assign(dy)?;
        let dtaus = dt1.iter().zip(&dt2).map(|(a, b)| *a + *b).collect();
        Ok((dx, dtaus))
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

/// Stack of transitional residual blocks sharing one per-sample τ vector.
#[derive(Debug, Clone)]
pub struct TransitionalStack<S: Scalar> {
    pub blocks: Vec<TransitionalBlock<S>>,
}

impl<S: Scalar> TransitionalStack<S> {
    pub fn new<R: Rng>(name: &str, count: usize, channels: usize, rng: &mut R) -> Self {
        let blocks =
            (0..count).map(|i| TransitionalBlock::new(&format!("{name}.{i}"), channels, rng)).collect();
        TransitionalStack { blocks }
    }

    pub fn forward(&mut self, x: &Tensor<S>, taus: &[S]) -> Result<Tensor<S>> {
        let mut h = x.clone();
        for block in &mut self.blocks {
            h = block.forward(&h, taus)?;
        }
        Ok(h)
    }

    pub fn backward(&mut self, dy: &Tensor<S>) -> Result<(Tensor<S>, Vec<S>)> {
        let mut dh = dy.clone();
        let batch = dy.shape()[0];
        let mut dtaus = vec![S::ZERO; batch];
        for block in self.blocks.iter_mut().rev() {
            let (dx, dt) = block.backward(&dh)?;
            dh = dx;
            for (acc, d) in dtaus.iter_mut().zip(&dt) {
                *acc += *d;
            }
        }
        Ok((dh, dtaus))
    }

    pub fn params(&self) -> Vec<&Param<S>> {
        self.blocks.iter().flat_map(|b| b.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        self.blocks.iter_mut().flat_map(|b| b.params_mut()).collect()
    }
}

/// Residual of the exact bilinear expansion for a single bias-free linear
/// conv, with the literal weighting (τ on Θ⁰ and x⁰):
/// ‖F^τ(τx⁰+(1−τ)x¹) − [τ²F⁰(x⁰) + τ(1−τ)F¹(x⁰) + τ(1−τ)F⁰(x¹) + (1−τ)²F¹(x¹)]‖∞.
pub fn bilinear_expansion_residual<S: Scalar>(
    tp: &TransitionalParams<S>,
    x0: &Tensor<S>,
    x1: &Tensor<S>,
    tau: f64,
) -> Result<f64> {
    if tp.theta0.bias.is_some() || tp.theta1.bias.is_some() {
        return Err(invalid("bilinear expansion requires bias-free layers".to_string()));
    }
    bilinear_residual_impl(tp, x0, x1, tau, false)
}

/// Same comparison with a ReLU after every conv: the identity no longer
/// holds, documenting why the nonlinear stacked network is a fit rather than
/// an algebraic identity.
pub fn bilinear_expansion_residual_with_relu<S: Scalar>(
    tp: &TransitionalParams<S>,
    x0: &Tensor<S>,
    x1: &Tensor<S>,
    tau: f64,
) -> Result<f64> {
    if tp.theta0.bias.is_some() || tp.theta1.bias.is_some() {
        return Err(invalid("bilinear expansion requires bias-free layers".to_string()));
    }
    bilinear_residual_impl(tp, x0, x1, tau, true)
}

fn bilinear_residual_impl<S: Scalar>(
    tp: &TransitionalParams<S>,
    x0: &Tensor<S>,
    x1: &Tensor<S>,
    tau: f64,
    with_relu: bool,
) -> Result<f64> {
    if x0.shape() != x1.shape() {
        return Err(shape_mismatch("bilinear expansion: inputs differ in shape".to_string()));
    }
    let apply = |x: &Tensor<S>, w: &Tensor<S>| -> Result<Tensor<S>> {
        let (y, _) = conv2d_forward(x, w, None, Padding::Zero, 1)?;
        if with_relu {
            Ok(Relu::new().forward(&y))
        } else {
            Ok(y)
        }
    };
    let t = S::from_f64(tau);
    let one_m = S::from_f64(1.0 - tau);
    // literal orientation: τ weighs Θ⁰ / x⁰
    let w_tau = blend(&tp.theta0.weight, &tp.theta1.weight, t, one_m);
    let x_tau = blend(x0, x1, t, one_m);

    let lhs = apply(&x_tau, &w_tau)?;
    let f0_x0 = apply(x0, &tp.theta0.weight)?;
    let f1_x0 = apply(x0, &tp.theta1.weight)?;
    let f0_x1 = apply(x1, &tp.theta0.weight)?;
    let f1_x1 = apply(x1, &tp.theta1.weight)?;

    let (tt, t1t) = (tau * tau, tau * (1.0 - tau));
    let omts = (1.0 - tau) * (1.0 - tau);
    let mut max_dev = 0.0f64;
    for i in 0..lhs.numel() {
        let rhs = tt * f0_x0.data()[i].to_f64()
            + t1t * f1_x0.data()[i].to_f64()
            + t1t * f0_x1.data()[i].to_f64()
            + omts * f1_x1.data()[i].to_f64();
        max_dev = max_dev.max((lhs.data()[i].to_f64() - rhs).abs());
    }
    Ok(max_dev)
}
