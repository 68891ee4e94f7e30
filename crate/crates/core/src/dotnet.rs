//! Degree-of-transitionality estimation.
//!
//! DoTNet is an assessment-aware score regression network: a conv stem, four
//! residual bottleneck blocks with stride-2 average pooling between them,
//! global average pooling, two fully connected layers, and a sigmoid. At
//! inference the input image is reduced to T random fixed-size patches and
//! the per-patch predictions are averaged.

use rand::Rng;

use crate::bridge::images_to_batch;
use crate::degradation::{degrade, dot_ground_truth, DegradationFamily, DegradationSampler, DoT};
use crate::error::{invalid, shape_mismatch, Error, Result};
use crate::imaging::{random_crops, Image};
use crate::nn::{
    AdamConfig, AdamState, AvgPool, BottleneckBlock, Checkpoint, Conv2d, GlobalAvgPool, Linear,
    Padding, Param, Relu, Scalar, Sigmoid, Tensor,
};
use crate::rng::SeedTree;

#[derive(Debug, Clone)]
pub struct DoTNetConfig {
    /// Patches sampled per image (T).
    pub patch_count: usize,
    pub patch_size: usize,
    pub bottleneck_blocks: usize,
    pub stem_channels: usize,
    pub bottleneck_channels: usize,
    pub fc_hidden: usize,
    /// Pooling factor after each block; length must equal `bottleneck_blocks`.
    pub pools: Vec<usize>,
}

impl Default for DoTNetConfig {
    fn default() -> Self {
        DoTNetConfig {
            patch_count: 8,
            patch_size: 32,
            bottleneck_blocks: 4,
            stem_channels: 16,
            bottleneck_channels: 8,
            fc_hidden: 32,
            pools: vec![2, 2, 2, 2],
        }
    }
}

/// Patch-based DoT regression network.
#[derive(Debug, Clone)]
pub struct DoTNet<S: Scalar> {
    pub config: DoTNetConfig,
    stem: Conv2d<S>,
    stem_relu: Relu,
    blocks: Vec<BottleneckBlock<S>>,
    pools: Vec<AvgPool>,
    gap: GlobalAvgPool,
    fc1: Linear<S>,
    relu: Relu,
    fc2: Linear<S>,
    sigmoid: Sigmoid<S>,
}

impl<S: Scalar> DoTNet<S> {
    pub fn new<R: Rng>(config: DoTNetConfig, rng: &mut R) -> Result<Self> {
        if config.pools.len() != config.bottleneck_blocks {
            return Err(invalid(format!(
                "pooling schedule length {} != {} blocks",
                config.pools.len(),
                config.bottleneck_blocks
            )));
        }
        // the spatial extent after all pools must stay positive
        let mut extent = config.patch_size;
        for p in &config.pools {
            if *p == 0 || extent % p != 0 {
                return Err(invalid(format!(
                    "pooling schedule {:?} does not divide patch size {}",
                    config.pools, config.patch_size
                )));
            }
            extent /= p;
        }
        let stem = Conv2d::new("dot.stem", 3, config.stem_channels, 3, Padding::Zero, 1, true, rng);
        let mut blocks: Vec<BottleneckBlock<S>> = (0..config.bottleneck_blocks)
            .map(|i| {
                BottleneckBlock::new(
                    &format!("dot.block{i}"),
                    config.stem_channels,
                    config.bottleneck_channels,
                    rng,
                )
            })
            .collect();
        // regression backbone: live closing convs — a zero-initialized
        // expand gates every earlier layer's gradient behind one conv
        for block in &mut blocks {
            let shape = block.expand.weight.value.shape().to_vec();
            let fan_in = shape[1] * shape[2] * shape[3];
            let std = (2.0 / fan_in as f64).sqrt() * 0.5;
            block.expand.weight.value = Tensor::randn(&shape, std, rng);
        }
        let pools = config.pools.iter().map(|p| AvgPool::new(*p)).collect();
        let fc1 = Linear::new("dot.fc1", config.stem_channels, config.fc_hidden, true, rng);
        let fc2 = Linear::new("dot.fc2", config.fc_hidden, 1, true, rng);
        Ok(DoTNet {
            config,
            stem,
            stem_relu: Relu::new(),
            blocks,
            pools,
            gap: GlobalAvgPool::new(),
            fc1,
            relu: Relu::new(),
            fc2,
            sigmoid: Sigmoid::new(),
        })
    }

    /// (N, 3, p, p) patches → (N, 1) predictions in (0, 1).
    pub fn forward(&mut self, patches: &Tensor<S>) -> Result<Tensor<S>> {
        let mut h = self.stem_relu.forward(&self.stem.forward(patches)?);
        for (block, pool) in self.blocks.iter_mut().zip(&mut self.pools) {
            h = pool.forward(&block.forward(&h)?)?;
        }
        let h = self.gap.forward(&h)?;
        let h = self.relu.forward(&self.fc1.forward(&h)?);
        let logits = self.fc2.forward(&h)?;
        Ok(self.sigmoid.forward(&logits))
    }

    /// Accumulate parameter gradients from dL/dpred.
    pub fn backward(&mut self, dpred: &Tensor<S>) -> Result<()> {
        let g = self.sigmoid.backward(dpred)?;
        let g = self.fc1.backward(&self.relu.backward(&self.fc2.backward(&g)?)?)?;
        let mut g = self.gap.backward(&g)?;
        for (block, pool) in self.blocks.iter_mut().zip(&mut self.pools).rev() {
            g = block.backward(&pool.backward(&g)?)?;
        }
        self.stem.backward(&self.stem_relu.backward(&g)?)?;
        Ok(())
    }

    pub fn params(&self) -> Vec<&Param<S>> {
        let mut out = self.stem.params();
        for b in &self.blocks {
            out.extend(b.params());
        }
        out.extend(self.fc1.params());
        out.extend(self.fc2.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<S>> {
        let mut out = self.stem.params_mut();
        for b in &mut self.blocks {
            out.extend(b.params_mut());
        }
        out.extend(self.fc1.params_mut());
        out.extend(self.fc2.params_mut());
        out
    }

    pub fn to_checkpoint(&self, family: DegradationFamily, bounds: (f64, f64)) -> Checkpoint {
        let mut ckpt = Checkpoint::new();
        ckpt.set_meta("model", "dotnet");
        ckpt.set_meta("family", family.as_str());
        ckpt.set_meta("param_min", bounds.0);
        ckpt.set_meta("param_max", bounds.1);
        ckpt.set_meta("patch_count", self.config.patch_count);
        ckpt.set_meta("patch_size", self.config.patch_size);
        ckpt.set_meta("bottleneck_blocks", self.config.bottleneck_blocks);
        ckpt.set_meta("stem_channels", self.config.stem_channels);
        ckpt.set_meta("bottleneck_channels", self.config.bottleneck_channels);
        ckpt.set_meta("fc_hidden", self.config.fc_hidden);
        ckpt.set_meta(
            "pools",
            self.config.pools.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(","),
        );
        for p in self.params() {
            ckpt.insert_tensor(&p.name, &p.value);
        }
        ckpt
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<(Self, DegradationFamily, (f64, f64))> {
        if ckpt.meta_str("model")? != "dotnet" {
            return Err(Error::Data("checkpoint is not a dotnet model".to_string()));
        }
        let family = DegradationFamily::parse(ckpt.meta_str("family")?)?;
        let bounds = (ckpt.meta_parse("param_min")?, ckpt.meta_parse("param_max")?);
        let config = DoTNetConfig {
            patch_count: ckpt.meta_parse("patch_count")?,
            patch_size: ckpt.meta_parse("patch_size")?,
            bottleneck_blocks: ckpt.meta_parse("bottleneck_blocks")?,
            stem_channels: ckpt.meta_parse("stem_channels")?,
            bottleneck_channels: ckpt.meta_parse("bottleneck_channels")?,
            fc_hidden: ckpt.meta_parse("fc_hidden")?,
            pools: ckpt
                .meta_str("pools")?
                .split(',')
                .map(|t| t.parse().map_err(|_| Error::Data("bad pools meta".to_string())))
                .collect::<Result<Vec<usize>>>()?,
        };
        let mut net = DoTNet::new(config, &mut SeedTree::new(0).rng("dotnet-load"))?;
        for p in net.params_mut() {
            p.value = ckpt.tensor(&p.name)?;
        }
        Ok((net, family, bounds))
    }
}

/// Eq.-style patch loss: every patch is supervised by its image-level τ_b,
/// `(1/BT)·Σ_b Σ_t |pred_{b,t} − τ_b|`. Returns the loss and dL/dpred.
pub fn dot_loss<S: Scalar>(preds: &Tensor<S>, targets: &[f64]) -> Result<(f64, Tensor<S>)> {
    let shape = preds.shape();
    if shape.len() != 2 || shape[0] != targets.len() {
        return Err(shape_mismatch(format!(
            "dot_loss: preds {:?} vs {} targets",
            shape,
            targets.len()
        )));
    }
    for v in preds.data() {
        let f = v.to_f64();
        if !(-1e-9..=1.0 + 1e-9).contains(&f) {
            return Err(invalid(format!("dot_loss: prediction {f} outside [0, 1]")));
        }
    }
    for t in targets {
        if !(0.0..=1.0).contains(t) {
            return Err(invalid(format!("dot_loss: target {t} outside [0, 1]")));
        }
    }
    let (b, t_count) = (shape[0], shape[1]);
    let n = (b * t_count) as f64;
    let inv = S::from_f64(1.0 / n);
    let mut grad = Tensor::zeros(shape);
    let mut total = 0.0;
    for bi in 0..b {
        let target = S::from_f64(targets[bi]);
        for ti in 0..t_count {
            let idx = bi * t_count + ti;
            let d = preds.data()[idx] - target;
            total += d.abs().to_f64();
            grad.data_mut()[idx] = if d > S::ZERO {
                inv
            } else if d < S::ZERO {
                -inv
            } else {
                S::ZERO
            };
        }
    }
    Ok((total / n, grad))
}

/// Estimate the DoT of an LR image: T random crops → per-patch regression →
/// arithmetic mean.
pub fn dot_estimate<S: Scalar, R: Rng>(
    img: &Image,
    model: &mut DoTNet<S>,
    rng: &mut R,
) -> Result<DoT> {
    let cfg_patches = model.config.patch_count;
    let patch = model.config.patch_size;
    let crops = random_crops(img, cfg_patches, patch, rng)?;
    let imgs: Vec<&Image> = crops.iter().map(|(p, _)| p).collect();
    let batch = images_to_batch::<S>(&imgs)?;
    let preds = model.forward(&batch)?;
    let mean = preds.data().iter().map(|v| v.to_f64()).sum::<f64>() / cfg_patches as f64;
    Ok(DoT::clamped(mean))
}

#[derive(Debug, Clone)]
pub struct DotTrainConfig {
    pub net: DoTNetConfig,
    pub sampler: DegradationSampler,
    /// Images per step (B).
    pub batch_images: usize,
    pub steps: u64,
    pub lr: f64,
    pub lr_halve_every: u64,
    /// Validation cadence in steps (0 disables intermediate validation).
    pub val_every: u64,
}

/// Train DoTNet on a family: per step, sample a parameter uniformly within
/// the family bounds per image, degrade, supervise every patch with the
/// ground-truth τ. Validation runs on a deterministic 5-level grid; the
/// best-validation parameters are what the function returns, along with the
/// (step, validation MAE) history.
pub fn train_dotnet<S: Scalar>(
    train: &[Image],
    val: &[Image],
    cfg: &DotTrainConfig,
    seed: SeedTree,
) -> Result<(DoTNet<S>, Vec<(u64, f64)>)> {
    if train.is_empty() {
        return Err(Error::Data("train_dotnet: empty dataset".to_string()));
    }
    if cfg.sampler.family != DegradationFamily::Additive
        && cfg.net.patch_size < cfg.sampler.kernel_size
    {
        return Err(invalid(format!(
            "patch size {} smaller than blur kernel {} for a convolutive family",
            cfg.net.patch_size, cfg.sampler.kernel_size
        )));
    }
    let mut model = DoTNet::<S>::new(cfg.net.clone(), &mut seed.rng("dotnet-init"))?;
    let mut adam = AdamState::new(AdamConfig::with_lr(cfg.lr));
    let mut history = Vec::new();
    let mut best: Option<(f64, Vec<Tensor<S>>)> = None;

    for step in 0..cfg.steps {
        let rng_tree = seed.child("step").child_idx(step);
        let mut rng = rng_tree.rng("batch");
        let mut patches: Vec<Image> = Vec::with_capacity(cfg.batch_images * cfg.net.patch_count);
        let mut taus = Vec::with_capacity(cfg.batch_images);
        for _ in 0..cfg.batch_images {
            let img = &train[rng.gen_range(0..train.len())];
            let (spec, tau) = cfg.sampler.sample(&mut rng)?;
            let hr = img.crop_to_multiple(spec.scale)?;
            let lr = degrade(&hr, &spec, &mut rng)?;
            for (p, _) in random_crops(&lr, cfg.net.patch_count, cfg.net.patch_size, &mut rng)? {
                patches.push(p);
            }
            taus.push(tau.value());
        }
        let refs: Vec<&Image> = patches.iter().collect();
        let batch = images_to_batch::<S>(&refs)?;
        let preds = model.forward(&batch)?; // (B·T, 1)
        let preds_bt = preds.clone().reshaped(&[cfg.batch_images, cfg.net.patch_count])?;
        let (loss, grad_bt) = dot_loss(&preds_bt, &taus)?;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("dot loss became non-finite at step {step}")));
        }
        let grad = grad_bt.reshaped(&[cfg.batch_images * cfg.net.patch_count, 1])?;
        model.backward(&grad)?;
        adam.config.lr = cfg.lr * 0.5f64.powi((step / cfg.lr_halve_every.max(1)) as i32);
        adam.step(&mut model.params_mut())?;

        if cfg.val_every > 0 && (step + 1) % cfg.val_every == 0 {
            let mae = validate_dotnet_grid(&mut model, val, &cfg.sampler, seed.child("val"))?;
            if best.as_ref().map(|(b, _)| mae < *b).unwrap_or(true) {
                best = Some((mae, model.params().iter().map(|p| p.value.clone()).collect()));
            }
            history.push((step + 1, mae));
        }
    }
    if history.is_empty() || history.last().map(|(s, _)| *s) != Some(cfg.steps) {
        let mae = validate_dotnet_grid(&mut model, val, &cfg.sampler, seed.child("val"))?;
        if best.as_ref().map(|(b, _)| mae < *b).unwrap_or(true) {
            best = Some((mae, model.params().iter().map(|p| p.value.clone()).collect()));
        }
        history.push((cfg.steps, mae));
    }
    if let Some((_, params)) = best {
        for (p, v) in model.params_mut().into_iter().zip(params) {
            p.value = v;
        }
    }
    Ok((model, history))
}

/// Mean |τ̂ − τ| over a deterministic 5-level grid spanning the family
/// bounds, every validation image evaluated at every level.
pub fn validate_dotnet_grid<S: Scalar>(
    model: &mut DoTNet<S>,
    val: &[Image],
    sampler: &DegradationSampler,
    seed: SeedTree,
) -> Result<f64> {
    if val.is_empty() {
        return Err(Error::Data("validate_dotnet_grid: empty validation set".to_string()));
    }
    let (lo, hi) = sampler.bounds;
    let levels: Vec<f64> = (0..5).map(|i| lo + (hi - lo) * f64::from(i) / 4.0).collect();
    let mut total = 0.0;
    let mut count = 0usize;
    for (li, level) in levels.iter().enumerate() {
        let spec = sampler.spec_for(*level)?;
        let tau = dot_ground_truth(&spec)?;
        for (i, img) in val.iter().enumerate() {
            let tree = seed.child("grid").child_idx((li * val.len() + i) as u64);
            let hr = img.crop_to_multiple(spec.scale)?;
            let lr = degrade(&hr, &spec, &mut tree.rng("deg"))?;
            let est = dot_estimate(&lr, model, &mut tree.rng("crops"))?;
            total += (est.value() - tau.value()).abs();
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Mean |τ̂ − τ| over a deterministic validation pass.
pub fn validate_dotnet<S: Scalar>(
    model: &mut DoTNet<S>,
    val: &[Image],
    sampler: &DegradationSampler,
    seed: SeedTree,
) -> Result<f64> {
    if val.is_empty() {
        return Err(Error::Data("validate_dotnet: empty validation set".to_string()));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, img) in val.iter().enumerate() {
        let tree = seed.child_idx(i as u64);
        let mut rng = tree.rng("deg");
        let (spec, tau) = sampler.sample(&mut rng)?;
        let hr = img.crop_to_multiple(spec.scale)?;
        let lr = degrade(&hr, &spec, &mut rng)?;
        let est = dot_estimate(&lr, model, &mut tree.rng("crops"))?;
        total += (est.value() - tau.value()).abs();
        count += 1;
    }
    Ok(total / count as f64)
}

/// Mean τ̂ per level over an evaluation grid — the statistic behind the
/// ordered-distribution check.
pub fn dot_grid_means<S: Scalar>(
    model: &mut DoTNet<S>,
    images: &[Image],
    sampler: &DegradationSampler,
    levels: &[f64],
    seed: SeedTree,
) -> Result<Vec<(f64, f64, f64)>> {
    let mut rows = Vec::new();
    for (li, level) in levels.iter().enumerate() {
        let spec = sampler.spec_for(*level)?;
        let tau = dot_ground_truth(&spec)?;
        let mut acc = 0.0;
        for (i, img) in images.iter().enumerate() {
            let tree = seed.child_idx((li * images.len() + i) as u64);
            let hr = img.crop_to_multiple(spec.scale)?;
            let lr = degrade(&hr, &spec, &mut tree.rng("deg"))?;
            let est = dot_estimate(&lr, model, &mut tree.rng("crops"))?;
            acc += est.value();
        }
        rows.push((*level, tau.value(), acc / images.len() as f64));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_loss_basic_values_and_oracle() {
        let preds = Tensor::<f64>::from_vec(&[1, 1], vec![0.3]).unwrap();
        let (loss, _) = dot_loss(&preds, &[0.5]).unwrap();
        assert!((loss - 0.2).abs() < 1e-12);

        let preds = Tensor::<f64>::from_vec(&[2, 2], vec![0.1, 0.9, 0.4, 0.6]).unwrap();
        let targets = [0.2, 0.7];
        let (loss, grad) = dot_loss(&preds, &targets).unwrap();
        // brute-force double sum
        let expect = ((0.1f64 - 0.2).abs()
            + (0.9f64 - 0.2).abs()
            + (0.4f64 - 0.7).abs()
            + (0.6f64 - 0.7).abs())
            / 4.0;
        assert!((loss - expect).abs() < 1e-12);
        assert_eq!(grad.data()[0], -0.25);
        assert_eq!(grad.data()[1], 0.25);

        let exact = Tensor::<f64>::from_vec(&[1, 2], vec![0.5, 0.5]).unwrap();
        assert_eq!(dot_loss(&exact, &[0.5]).unwrap().0, 0.0);
    }

    #[test]
    fn dot_loss_validates_ranges() {
        let preds = Tensor::<f64>::from_vec(&[1, 1], vec![1.5]).unwrap();
        assert!(dot_loss(&preds, &[0.5]).is_err());
        let preds = Tensor::<f64>::from_vec(&[1, 1], vec![0.5]).unwrap();
        assert!(dot_loss(&preds, &[1.5]).is_err());
    }

    #[test]
    fn forward_stays_in_unit_interval_and_patch_order_is_irrelevant() {
        let tree = SeedTree::new(55);
        let cfg = DoTNetConfig { patch_size: 16, pools: vec![2, 2, 2, 1], ..Default::default() };
        let mut net = DoTNet::<f64>::new(cfg, &mut tree.rng("init")).unwrap();
        // nontrivial outputs: perturb the zero-initialized expand convs
        for p in net.params_mut() {
            if p.name.contains("expand") {
                p.value = Tensor::randn(p.value.shape(), 0.3, &mut tree.rng(&p.name.clone()));
            }
        }
        let patches = Tensor::<f64>::randn(&[8, 3, 16, 16], 0.5, &mut tree.rng("x"));
        let preds = net.forward(&patches).unwrap();
        assert_eq!(preds.shape(), [8, 1]);
        for v in preds.data() {
            assert!((0.0..=1.0).contains(v));
        }
        let mean: f64 = preds.data().iter().sum::<f64>() / 8.0;

        // permute patches: mean unchanged (exactly, fixed summation order of
        // the same values)
        let mut permuted_data = patches.to_f64_vec();
        let plane = 3 * 16 * 16;
        permuted_data.rotate_left(3 * plane);
        let permuted = Tensor::<f64>::from_vec(&[8, 3, 16, 16], permuted_data).unwrap();
        let preds2 = net.forward(&permuted).unwrap();
        let mut sorted1: Vec<f64> = preds.data().to_vec();
        let mut sorted2: Vec<f64> = preds2.data().to_vec();
        sorted1.sort_by(f64::total_cmp);
        sorted2.sort_by(f64::total_cmp);
        assert_eq!(sorted1, sorted2);
        let mean2: f64 = preds2.data().iter().sum::<f64>() / 8.0;
        assert!((mean - mean2).abs() < 1e-12);
    }

    #[test]
    fn convolutive_training_rejects_small_patches() {
        let cfg = DotTrainConfig {
            net: DoTNetConfig { patch_size: 16, pools: vec![2, 2, 2, 1], ..Default::default() },
            sampler: DegradationSampler::new(
                DegradationFamily::Convolutive,
                (0.2, 2.0),
                2,
                21,
            ),
            batch_images: 2,
            steps: 1,
            lr: 1e-3,
            lr_halve_every: 1000,
            val_every: 0,
        };
        let imgs = vec![Image::constant(64, 64, 3, 0.5)];
        assert!(train_dotnet::<f32>(&imgs, &imgs, &cfg, SeedTree::new(1)).is_err());
    }
}
