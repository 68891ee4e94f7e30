//! Training loop: per step, each sample gets a fresh degradation drawn from
//! the family bounds (or the fixed baseline level), the LR/HR pair is
//! dihedral-augmented, and the L1 objective is optimized with Adam under a
//! halving learning-rate schedule.

use rand::Rng;

use super::{TlsrConfig, TlsrModel};
use crate::bridge::images_to_batch;
use crate::degradation::{degrade, DegradationSpec, DoT};
use crate::error::{Error, Result};
use crate::imaging::{augment, mean_rgb, Image, PatchBox};
use crate::nn::{l1_loss, AdamConfig, AdamState, Scalar};
use crate::rng::SeedTree;

#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    /// Loss at every step.
    pub losses: Vec<f64>,
}

/// Train a TLSR model (or, with `fixed_tau`, a single-primary baseline).
pub fn tlsr_train<S: Scalar>(
    cfg: &TlsrConfig,
    dataset: &[Image],
    seed: SeedTree,
) -> Result<(TlsrModel<S>, TrainLog)> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Data("tlsr_train: empty dataset".to_string()));
    }
    let mean = mean_rgb(dataset)?;
    let mut model = TlsrModel::<S>::new(cfg, mean, &mut seed.rng("tlsr-init"))?;
    let mut adam = AdamState::new(AdamConfig::with_lr(cfg.lr));
    let sampler = cfg.sampler();
    let mut log = TrainLog::default();

    let hr_patch = cfg.lr_patch * cfg.scale;
    for step in 0..cfg.steps {
        let mut rng = seed.child("step").child_idx(step).rng("batch");
        let mut lr_imgs = Vec::with_capacity(cfg.batch);
        let mut hr_imgs = Vec::with_capacity(cfg.batch);
        let mut taus = Vec::with_capacity(cfg.batch);
        for _ in 0..cfg.batch {
            let img = &dataset[rng.gen_range(0..dataset.len())];
            if img.height < hr_patch || img.width < hr_patch {
                return Err(Error::Data(format!(
                    "training image {}x{} smaller than HR crop {hr_patch}",
                    img.height, img.width
                )));
            }
            let top = rng.gen_range(0..=img.height - hr_patch);
            let left = rng.gen_range(0..=img.width - hr_patch);
            let hr = img.crop(&PatchBox { top, left, height: hr_patch, width: hr_patch })?;
            let (spec, tau) = sample_step_degradation(cfg, &sampler, &mut rng)?;
            let lr = degrade(&hr, &spec, &mut rng)?;
            let (lr, hr) = augment(&lr, &hr, &mut rng)?;
            lr_imgs.push(lr);
            hr_imgs.push(hr);
            taus.push(S::from_f64(tau.value()));
        }
        let lr_refs: Vec<&Image> = lr_imgs.iter().collect();
        let hr_refs: Vec<&Image> = hr_imgs.iter().collect();
        let x = images_to_batch::<S>(&lr_refs)?;
        let target = images_to_batch::<S>(&hr_refs)?;

        let y = model.forward(&x, &taus)?;
        let (loss, grad) = l1_loss(&y, &target)?;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("tlsr loss became non-finite at step {step}")));
        }
        log.losses.push(loss);
        model.backward(&grad)?;
        adam.config.lr = cfg.lr * 0.5f64.powi((step / cfg.lr_halve_every.max(1)) as i32);
        adam.step(&mut model.params_mut())?;
    }
    Ok((model, log))
}

fn sample_step_degradation<R: Rng>(
    cfg: &TlsrConfig,
    sampler: &crate::degradation::DegradationSampler,
    rng: &mut R,
) -> Result<(DegradationSpec, DoT)> {
    match cfg.fixed_tau {
        None => sampler.sample(rng),
        Some(t) => {
            let param = cfg.param_min + t * (cfg.param_max - cfg.param_min);
            let spec = sampler.spec_for(param)?;
            // the fixed τ overrides the canonical map (they agree whenever the
            // bounds span a transition)
            let tau = DoT::new(t)?;
            Ok((spec, tau))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degradation::DegradationFamily;
    use crate::rng::sample_standard_normal;

    fn tiny_dataset(count: usize, side: usize, seed: u64) -> Vec<Image> {
        // smooth random blobs plus edges: enough structure to learn from
        let tree = SeedTree::new(seed);
        (0..count)
            .map(|i| {
                let mut rng = tree.rng(&format!("img{i}"));
                let mut img = Image::zeros(side, side, 3);
                let cx = rng.gen_range(0.2..0.8) * side as f64;
                let cy = rng.gen_range(0.2..0.8) * side as f64;
                let freq = rng.gen_range(0.15..0.5);
                for r in 0..side {
                    for c in 0..side {
                        let d2 = ((r as f64 - cy).powi(2) + (c as f64 - cx).powi(2)) / 64.0;
                        let blob = (-d2).exp();
                        for ch in 0..3 {
                            let wave =
                                0.25 * ((freq * (r + ch * 3) as f64).sin() * (freq * c as f64).cos());
                            let v = 0.5 + 0.35 * blob + wave + 0.02 * sample_standard_normal(&mut rng);
                            img.set(r, c, ch, v.clamp(0.0, 1.0));
                        }
                    }
                }
                img
            })
            .collect()
    }

    #[test]
    fn rejects_empty_dataset_and_bad_bounds() {
        let cfg = TlsrConfig::desk(DegradationFamily::Additive, 2);
        assert!(tlsr_train::<f32>(&cfg, &[], SeedTree::new(1)).is_err());

        let bad = TlsrConfig {
            param_min: 2.0,
            param_max: 1.0,
            ..TlsrConfig::desk(DegradationFamily::Convolutive, 2)
        };
        let data = tiny_dataset(1, 80, 9);
        assert!(tlsr_train::<f32>(&bad, &data, SeedTree::new(1)).is_err());
    }

    #[test]
    fn short_training_run_is_finite_and_reproducible() {
        let cfg = TlsrConfig {
            trunk_blocks: 1,
            channels: 6,
            transitional_blocks: 1,
            steps: 8,
            batch: 2,
            lr_patch: 12,
            kernel_size: 5,
            ..TlsrConfig::desk(DegradationFamily::Additive, 2)
        };
        let data = tiny_dataset(2, 48, 10);
        let (model_a, log_a) = tlsr_train::<f32>(&cfg, &data, SeedTree::new(77)).unwrap();
        assert_eq!(log_a.losses.len(), 8);
        assert!(log_a.losses.iter().all(|l| l.is_finite()));
        let (model_b, log_b) = tlsr_train::<f32>(&cfg, &data, SeedTree::new(77)).unwrap();
        assert_eq!(log_a.losses, log_b.losses);
        for (a, b) in model_a.params().iter().zip(model_b.params().iter()) {
            assert_eq!(a.value.data(), b.value.data(), "{}", a.name);
        }
    }
}
