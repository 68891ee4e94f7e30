//! The TLSR network.

use rand::Rng;

use super::TlsrConfig;
use crate::bridge::{image_to_tensor, tensor_to_image};
use crate::degradation::{DegradationFamily, DoT};
use crate::error::{invalid, Error, Result};
use crate::imaging::Image;
use crate::nn::{Checkpoint, Conv2d, Padding, Param, PixelShuffle, ResidualBlock, Scalar, Tensor};
use crate::rng::SeedTree;
use crate::transitional::TransitionalStack;

/// Decompose an upscaling factor into sub-pixel stages (powers of 2 and 3).
fn shuffle_stages(scale: usize) -> Result<Vec<usize>> {
    let mut rem = scale;
    let mut stages = Vec::new();
    while rem % 2 == 0 {
        stages.push(2);
        rem /= 2;
    }
    while rem % 3 == 0 {
        stages.push(3);
        rem /= 3;
    }
    if rem != 1 {
        return Err(invalid(format!("unsupported upscaling factor {scale}")));
    }
    Ok(stages)
}

#[derive(Debug, Clone)]
pub struct TlsrModel<S: Scalar> {
    pub family: DegradationFamily,
    pub bounds: (f64, f64),
    pub scale: usize,
    pub mean_rgb: [f64; 3],
    pub trunk_blocks: usize,
    pub channels: usize,
    pub transitional_blocks: usize,
    head: Conv2d<S>,
    trunk: Vec<ResidualBlock<S>>,
    transitional: TransitionalStack<S>,
    upsample: Vec<(Conv2d<S>, PixelShuffle)>,
    tail: Conv2d<S>,
    skip_cache: Option<TensorShape>,
}

type TensorShape = Vec<usize>;

impl<S: Scalar> TlsrModel<S> {
    pub fn new<R: Rng>(cfg: &TlsrConfig, mean_rgb: [f64; 3], rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let c = cfg.channels;
        let head = Conv2d::new("head", 3, c, 3, Padding::Zero, 1, true, rng);
        let trunk =
            (0..cfg.trunk_blocks).map(|i| ResidualBlock::new(&format!("trunk.{i}"), c, rng)).collect();
        let transitional = TransitionalStack::new("trans", cfg.transitional_blocks, c, rng);
        let mut upsample = Vec::new();
        for (i, r) in shuffle_stages(cfg.scale)?.into_iter().enumerate() {
            let conv = Conv2d::new(&format!("up.{i}"), c, c * r * r, 3, Padding::Zero, 1, true, rng);
            upsample.push((conv, PixelShuffle::new(r)));
        }
        let tail = Conv2d::new("tail", c, 3, 3, Padding::Zero, 1, true, rng);
        Ok(TlsrModel {
            family: cfg.family,
            bounds: (cfg.param_min, cfg.param_max),
            scale: cfg.scale,
            mean_rgb,
            trunk_blocks: cfg.trunk_blocks,
            channels: cfg.channels,
            transitional_blocks: cfg.transitional_blocks,
            head,
            trunk,
            transitional,
            upsample,
            tail,
            skip_cache: None,
        })
    }

    /// (B, 3, H, W) in [0,1] plus one τ per sample → (B, 3, sH, sW).
    pub fn forward(&mut self, x: &Tensor<S>, taus: &[S]) -> Result<Tensor<S>> {
        let xs = x.shape();
        if xs.len() != 4 || xs[1] != 3 {
            return Err(Error::ShapeMismatch(format!("tlsr forward expects (B,3,H,W), got {xs:?}")));
        }
        if taus.len() != xs[0] {
            return Err(invalid(format!("{} taus for batch {}", taus.len(), xs[0])));
        }
        for t in taus {
            let tf = t.to_f64();
            if !(0.0..=1.0).contains(&tf) {
                return Err(invalid(format!("tau {tf} outside [0, 1]")));
            }
        }
        let mut input = x.clone();
        self.shift_mean(&mut input, -1.0);

        let f0 = self.head.forward(&input)?;
        let mut f = f0.clone();
        for block in &mut self.trunk {
            f = block.forward(&f)?;
        }
        f.add_assign(&f0)?; // global residual over the homogeneous trunk
        self.skip_cache = Some(f0.shape().to_vec());

        let mut f = self.transitional.forward(&f, taus)?;
        for (conv, shuffle) in &mut self.upsample {
            f = shuffle.forward(&conv.forward(&f)?)?;
        }
        let mut y = self.tail.forward(&f)?;
        self.shift_mean(&mut y, 1.0);
        Ok(y)
    }

    /// Backward from dL/dy; parameter gradients accumulate in place.
    /// Returns per-sample dL/dτ (used when DoTNet trains jointly).
    pub fn backward(&mut self, dy: &Tensor<S>) -> Result<Vec<S>> {
        let mut g = self.tail.backward(dy)?;
        for (conv, shuffle) in self.upsample.iter_mut().rev() {
            g = conv.backward(&shuffle.backward(&g)?)?;
        }
        let (g_trunk_out, dtaus) = self.transitional.backward(&g)?;
        self.skip_cache = None;
        // global residual: gradient reaches both the block chain and f0
        let mut g = g_trunk_out.clone();
        for block in self.trunk.iter_mut().rev() {
            g = block.backward(&g)?;
        }
        g.add_assign(&g_trunk_out)?;
        self.head.backward(&g)?;
        Ok(dtaus)
    }

    fn shift_mean(&self, t: &mut Tensor<S>, sign: f64) {
        let s = t.shape().to_vec();
        let (b, _, h, w) = (s[0], s[1], s[2], s[3]);
        let plane = h * w;
        for bi in 0..b {
            for ch in 0..3 {
                let m = S::from_f64(sign * self.mean_rgb[ch]);
                for v in &mut t.data_mut()[(bi * 3 + ch) * plane..(bi * 3 + ch + 1) * plane] {
                    *v += m;
                }
            }
        }
    }

    /// Single-image forward with a known τ.
    pub fn forward_image(&mut self, img: &Image, tau: DoT) -> Result<Image> {
        let x = image_to_tensor::<S>(img);
        let y = self.forward(&x, &[S::from_f64(tau.value())])?;
        tensor_to_image(&y, 0)
    }

    pub fn params(&self) -> Vec<&Param<S>> {
        let mut out = self.head.params();
        for b in &self.trunk {
            out.extend(b.params());
        }
        out.extend(self.transitional.params());
        for (c, _) in &self.upsample {
            out.extend(c.params());
        }
        out.extend(self.tail.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        let mut out = self.head.params_mut();
        for b in &mut self.trunk {
            out.extend(b.params_mut());
        }
        out.extend(self.transitional.params_mut());
        for (c, _) in &mut self.upsample {
            out.extend(c.params_mut());
        }
        out.extend(self.tail.params_mut());
        out
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ckpt = Checkpoint::new();
        ckpt.set_meta("model", "tlsr");
        ckpt.set_meta("family", self.family.as_str());
        ckpt.set_meta("param_min", self.bounds.0);
        ckpt.set_meta("param_max", self.bounds.1);
        ckpt.set_meta("scale", self.scale);
        ckpt.set_meta("trunk_blocks", self.trunk_blocks);
        ckpt.set_meta("channels", self.channels);
        ckpt.set_meta("transitional_blocks", self.transitional_blocks);
        ckpt.set_meta("mean_rgb", format!("{:.17e},{:.17e},{:.17e}", self.mean_rgb[0], self.mean_rgb[1], self.mean_rgb[2]));
        for p in self.params() {
            ckpt.insert_tensor(&p.name, &p.value);
        }
        ckpt
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.meta_str("model")? != "tlsr" {
            return Err(Error::Data("checkpoint is not a tlsr model".to_string()));
        }
        let family = DegradationFamily::parse(ckpt.meta_str("family")?)?;
        let mean_parts: Vec<f64> = ckpt
            .meta_str("mean_rgb")?
            .split(',')
            .map(|t| t.parse().map_err(|_| Error::Data("bad mean_rgb meta".to_string())))
            .collect::<Result<Vec<f64>>>()?;
        if mean_parts.len() != 3 {
            return Err(Error::Data("mean_rgb meta must have 3 entries".to_string()));
        }
        let cfg = TlsrConfig {
            family,
            param_min: ckpt.meta_parse("param_min")?,
            param_max: ckpt.meta_parse("param_max")?,
            scale: ckpt.meta_parse("scale")?,
            trunk_blocks: ckpt.meta_parse("trunk_blocks")?,
            channels: ckpt.meta_parse("channels")?,
            transitional_blocks: ckpt.meta_parse("transitional_blocks")?,
            // fixed_tau=0 skips the bounds-span check; schedule fields are
            // irrelevant for a loaded model
            fixed_tau: Some(0.0),
            ..TlsrConfig::desk(family, ckpt.meta_parse("scale")?)
        };
        let mut model =
            TlsrModel::new(&cfg, [mean_parts[0], mean_parts[1], mean_parts[2]], &mut SeedTree::new(0).rng("tlsr-load"))?;
        model.bounds = (cfg.param_min, cfg.param_max);
        for p in model.params_mut() {
            p.value = ckpt.tensor(&p.name)?;
        }
        Ok(model)
    }
}
