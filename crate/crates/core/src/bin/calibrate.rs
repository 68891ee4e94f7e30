//! Dev-time calibration harness for the toy-scale training experiments.
//! Prints the ablation/DoT statistics so schedules can be frozen into the
//! test suite with margin.

use std::time::Instant;

use tlsr_core::degradation::{DegradationFamily, DegradationSampler};
use tlsr_core::dotnet::{dot_grid_means, train_dotnet, DoTNetConfig, DotTrainConfig};
use tlsr_core::harness::{aggregate_levels, run_eval, synth_dataset, SrMethod};
use tlsr_core::rng::SeedTree;
use tlsr_core::tlsr::{tlsr_train, TlsrConfig};

fn env_u64(name: &str, default: u64) -> u64 {
    std::env::var(name).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

fn main() {
    let steps = env_u64("CAL_STEPS", 3000);
    let dot_steps = env_u64("CAL_DOT_STEPS", 1500);
    let which = std::env::var("CAL_WHICH").unwrap_or_else(|_| "all".to_string());

    let train_count = env_u64("CAL_TRAIN_IMGS", 20) as usize;
    let train_images = synth_dataset(train_count, 96, 96, 101);
    let eval_images = synth_dataset(6, 96, 96, 202);

    let base = TlsrConfig {
        trunk_blocks: 4,
        channels: 16,
        transitional_blocks: 2,
        kernel_size: 5,
        lr: 1e-3,
        lr_halve_every: steps / 3,
        steps,
        batch: 4,
        lr_patch: 32,
        ..TlsrConfig::desk(DegradationFamily::Additive, 2)
    };
    let levels = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
    let sampler = base.sampler();

    let mut dot_add = None;
    if which == "all" || which == "dot" {
        // DoTNet additive
        let t0 = Instant::now();
        let dot_cfg = DotTrainConfig {
            net: DoTNetConfig { patch_size: 32, ..Default::default() },
            sampler: sampler.clone(),
            batch_images: 8,
            steps: dot_steps,
            lr: 1e-3,
            lr_halve_every: dot_steps / 2,
            val_every: dot_steps / 10,
        };
        let (mut dot, hist) =
            train_dotnet::<f32>(&train_images, &eval_images, &dot_cfg, SeedTree::new(11)).unwrap();
        println!("[dot-additive] {:.1}s history {:?}", t0.elapsed().as_secs_f64(), hist);
        let mae = tlsr_core::dotnet::validate_dotnet_grid(&mut dot, &eval_images, &sampler, SeedTree::new(33)).unwrap();
        let grid = dot_grid_means(&mut dot, &eval_images, &sampler, &levels, SeedTree::new(44)).unwrap();
        println!("[dot-additive] held-out MAE {mae:.4}");
        for (lv, tau, est) in &grid {
            println!("  level {lv:5.1} tau {tau:.3} mean_tau_hat {est:.3}");
        }

        // stage-1 sanity: blur-only input through the additive DoTNet
        let blur_sampler = DegradationSampler::new(DegradationFamily::Convolutive, (0.2, 2.0), 2, 13);
        let spec = blur_sampler.spec_for(1.0).unwrap();
        let mut acc = 0.0;
        for (i, img) in eval_images.iter().enumerate() {
            let tree = SeedTree::new(55).child_idx(i as u64);
            let hr = img.crop_to_multiple(2).unwrap();
            let lr = tlsr_core::degradation::degrade(&hr, &spec, &mut tree.rng("d")).unwrap();
            let est = tlsr_core::dotnet::dot_estimate(&lr, &mut dot, &mut tree.rng("c")).unwrap();
            acc += est.value();
        }
        println!("[dot-additive] mean tau_hat on blur-only input: {:.3}", acc / eval_images.len() as f64);
        dot_add = Some(dot);

        // DoTNet convolutive
        let t0 = Instant::now();
        let conv_sampler = DegradationSampler::new(DegradationFamily::Convolutive, (0.2, 2.0), 2, 13);
        let big_train = synth_dataset(56, 128, 128, 303);
        let big_eval = synth_dataset(8, 128, 128, 404);
        let dot_cfg_b = DotTrainConfig {
            sampler: conv_sampler.clone(),
            net: DoTNetConfig { patch_size: 48, pools: vec![2, 2, 2, 1], ..Default::default() },
            val_every: 250,
            batch_images: 6,
            steps: env_u64("CAL_DOT_STEPS_B", 4000),
            lr_halve_every: env_u64("CAL_DOT_STEPS_B", 4000) / 2,
            ..dot_cfg.clone()
        };
        let (mut dot_b, hist_b) =
            train_dotnet::<f32>(&big_train, &big_eval, &dot_cfg_b, SeedTree::new(12)).unwrap();
        println!("[dot-convolutive] {:.1}s history {:?}", t0.elapsed().as_secs_f64(), hist_b);
        let mae_b = tlsr_core::dotnet::validate_dotnet_grid(&mut dot_b, &big_eval, &conv_sampler, SeedTree::new(34)).unwrap();
        let grid_b = dot_grid_means(
            &mut dot_b,
            &big_eval,
            &conv_sampler,
            &[0.2, 0.5, 1.0, 1.5, 2.0],
            SeedTree::new(45),
        )
        .unwrap();
        println!("[dot-convolutive] held-out MAE {mae_b:.4}");
        for (lv, tau, est) in &grid_b {
            println!("  sigma {lv:4.2} tau {tau:.3} mean_tau_hat {est:.3}");
        }
    }

    if which == "all" || which == "ablation" {
        for (label, fixed_tau) in [("d0", Some(0.0)), ("d1", Some(1.0)), ("tlsr", None)] {
            let cfg = TlsrConfig { fixed_tau, ..base.clone() };
            let t0 = Instant::now();
            let (mut model, log) = tlsr_train::<f32>(&cfg, &train_images, SeedTree::new(21)).unwrap();
            let ids: Vec<String> = (0..eval_images.len()).map(|i| format!("e{i}")).collect();
            let method = match fixed_tau {
                Some(t) => SrMethod::FixedTau(&mut model, t),
                None => SrMethod::OracleTau(&mut model),
            };
            let report = run_eval(
                &eval_images,
                &ids,
                &sampler,
                &levels,
                method,
                SeedTree::new(66),
                String::new(),
            )
            .unwrap();
            println!(
                "[{label}] trained {:.0}s, final loss {:.4}",
                t0.elapsed().as_secs_f64(),
                log.losses.last().unwrap()
            );
            for l in &report.levels {
                println!("  level {:5.1}: psnr {:6.2}", l.param, l.mean_psnr);
            }
            let best = report.levels.iter().map(|l| l.mean_psnr).fold(f64::NEG_INFINITY, f64::max);
            let worst = report.levels.iter().map(|l| l.mean_psnr).fold(f64::INFINITY, f64::min);
            println!("  best {best:.2} worst {worst:.2} gap {:.2}", best - worst);

            if fixed_tau.is_none() {
                if let Some(dot) = dot_add.as_mut() {
                    let blind = run_eval(
                        &eval_images,
                        &ids,
                        &sampler,
                        &levels,
                        SrMethod::Blind(&mut model, dot),
                        SeedTree::new(66),
                        String::new(),
                    )
                    .unwrap();
                    let again = aggregate_levels(&blind.rows, &levels);
                    println!(
                        "[tlsr-blind] overall {:.2} vs oracle overall {:.2} (rows {})",
                        blind.overall_psnr,
                        report.overall_psnr,
                        again.len()
                    );
                }
            }
        }
    }
}
