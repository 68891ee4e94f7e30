//! Command-line front end: degradation synthesis, transition-kernel
//! verification, training, evaluation, blind inference, and report plotting.
//!
//! Exit codes: 0 ok, 1 usage error, 2 data error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tlsr_core::degradation::{
    anisotropic_kernel, gaussian_kernel, transition_kernel, DegradationFamily, DegradationSpec,
    DoT,
};
use tlsr_core::dotnet::{train_dotnet, DoTNet};
use tlsr_core::error::{Error, Result};
use tlsr_core::harness::{
    ingest_dataset, psnr_curve_svg, run_eval, series_from_level_csv, synth_dataset, RunConfig,
    Series, SrMethod,
};
use tlsr_core::imaging::{read_png, write_png, Image};
use tlsr_core::nn::Checkpoint;
use tlsr_core::rng::SeedTree;
use tlsr_core::tlsr::{tlsr_infer, tlsr_real, tlsr_train, TlsrModel};

#[derive(Parser)]
#[command(name = "tlsr", version, about = "Transitional learning for blind super-resolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply a parametric degradation (blur ⊗, bicubic ↓s, noise +) to a PNG
    Degrade {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        scale: usize,
        /// Isotropic blur sigma (ignored when --theta is given)
        #[arg(long, default_value_t = 0.2)]
        sigma: f64,
        /// AWGN level in 8-bit units
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 21)]
        kernel_size: usize,
        /// Anisotropic kernel rotation angle (radians); enables the
        /// anisotropic kernel with --sigma-u/--sigma-v
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long, default_value_t = 1.3)]
        sigma_u: f64,
        #[arg(long, default_value_t = 3.25)]
        sigma_v: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Check the analytic transition kernels against directly evaluated
    /// Gaussians over a (σ0, σ1, τ) grid and emit the deviation table
    VerifyProp1 {
        /// CSV output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 21)]
        kernel_size: usize,
    },
    /// Train the DoT estimation network; emits checkpoint + MAE-vs-step CSV
    TrainDot {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's degradation family (noise|blur|angle)
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the TLSR network; emits checkpoint + loss CSV
    TrainTlsr {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Train a single-primary baseline at this fixed τ
        #[arg(long)]
        fixed_tau: Option<f64>,
    },
    /// Evaluate on the discrete degradation grid; emits per-image and
    /// per-level CSVs plus an SVG curve
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// bicubic | oracle | blind | fixed
        #[arg(long, default_value = "bicubic")]
        mode: String,
        /// τ used by mode=fixed (single-primary baseline evaluation)
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
        #[arg(long)]
        sr_checkpoint: Option<PathBuf>,
        #[arg(long)]
        dot_checkpoint: Option<PathBuf>,
        /// Evaluation image directory (defaults to the config's val_dir or
        /// data_dir)
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Blind single-image super-resolution
    Sr {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sr_checkpoint: PathBuf,
        #[arg(long)]
        dot_checkpoint: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Two-stage blind restoration: denoise at x1, then deblur + upscale
    SrReal {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        denoise_sr: PathBuf,
        #[arg(long)]
        denoise_dot: PathBuf,
        #[arg(long)]
        deblur_sr: PathBuf,
        #[arg(long)]
        deblur_dot: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Plot PSNR-vs-level curves from one or more level CSVs
    Report {
        /// Series as label=path, repeatable
        #[arg(long = "csv", required = true)]
        csvs: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "PSNR vs degradation level")]
        title: String,
    },
    /// Generate a procedural PNG dataset for smoke runs
    SynthData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 24)]
        count: usize,
        #[arg(long, default_value_t = 96)]
        size: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1) // usage error
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Degrade {
            input,
            out,
            scale,
            sigma,
            noise,
            kernel_size,
            theta,
            sigma_u,
            sigma_v,
            seed,
        } => {
            let img = read_png(&input)?;
            let kernel = match theta {
                Some(t) => anisotropic_kernel(sigma_u, sigma_v, t, kernel_size)?,
                None => gaussian_kernel(sigma.max(1e-6), kernel_size)?,
            };
            let family = match theta {
                Some(_) => DegradationFamily::AnisotropicAngle,
                None if noise > 0.0 => DegradationFamily::Additive,
                None => DegradationFamily::Convolutive,
            };
            let bounds = match family {
                DegradationFamily::Additive => (0.0, noise.max(30.0)),
                DegradationFamily::Convolutive => (0.0, sigma.max(4.0)),
                DegradationFamily::AnisotropicAngle => (0.0, std::f64::consts::PI),
            };
            let spec = DegradationSpec { scale, kernel, noise_level: noise, family, family_bounds: bounds };
            let hr = img.crop_to_multiple(scale)?;
            let lr = tlsr_core::degradation::degrade(&hr, &spec, &mut SeedTree::new(seed).rng("degrade"))?;
            write_png(&lr.clamp01(), &out)?;
            println!(
                "degraded {} ({}x{}) -> {} ({}x{})",
                input.display(),
                hr.width,
                hr.height,
                out.display(),
                lr.width,
                lr.height
            );
            Ok(())
        }

        Command::VerifyProp1 { out, kernel_size } => {
            let mut csv = String::from("sigma0,sigma1,tau,sigma_tau,max_dev\n");
            let mut worst = 0.0f64;
            for (s0, s1) in [(0.2, 2.0), (0.5, 4.0), (1.0, 3.0)] {
                for i in 0..=10 {
                    let tau = f64::from(i) / 10.0;
                    let t = transition_kernel(s0, s1, DoT::new(tau)?, kernel_size)?;
                    let sigma_tau = (1.0 - tau) * s0 + tau * s1;
                    let g = gaussian_kernel(sigma_tau, kernel_size)?;
                    let dev = t.max_abs_diff(&g);
                    worst = worst.max(dev);
                    csv.push_str(&format!("{s0},{s1},{tau:.1},{sigma_tau:.6},{dev:.3e}\n"));
                }
            }
            match &out {
                Some(path) => std::fs::write(path, &csv)?,
                None => print!("{csv}"),
            }
            println!("max deviation over grid: {worst:.3e}");
            if worst >= 1e-6 {
                return Err(Error::Numerical(format!(
                    "transition kernels deviate by {worst:.3e} (>= 1e-6)"
                )));
            }
            Ok(())
        }

        Command::TrainDot { config, family, seed, out } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(f) = family {
                cfg.tlsr.family = DegradationFamily::parse(&f)?;
                let defaults = RunConfig::new(cfg.tlsr.family, cfg.tlsr.scale);
                cfg.tlsr.param_min = defaults.tlsr.param_min;
                cfg.tlsr.param_max = defaults.tlsr.param_max;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            std::fs::create_dir_all(&cfg.out_dir)?;
            let (train_images, val_images) = load_train_val(&cfg)?;
            let t0 = std::time::Instant::now();
            let (model, history) = train_dotnet::<f32>(
                &train_images,
                &val_images,
                &cfg.dot_train_config(),
                SeedTree::new(cfg.seed),
            )?;
            let ckpt_path = cfg.out_dir.join(format!("dot_{}.ckpt", cfg.tlsr.family.as_str()));
            model
                .to_checkpoint(cfg.tlsr.family, (cfg.tlsr.param_min, cfg.tlsr.param_max))
                .save(&ckpt_path)?;
            let mut csv = String::from("step,val_mae\n");
            for (step, mae) in &history {
                csv.push_str(&format!("{step},{mae:.6}\n"));
            }
            let csv_path = cfg.out_dir.join(format!("train_dot_{}.csv", cfg.tlsr.family.as_str()));
            std::fs::write(&csv_path, csv)?;
            println!(
                "trained DoTNet ({}) in {:.1}s; final val MAE {:.4}; checkpoint {}",
                cfg.tlsr.family.as_str(),
                t0.elapsed().as_secs_f64(),
                history.last().map(|(_, m)| *m).unwrap_or(f64::NAN),
                ckpt_path.display()
            );
            Ok(())
        }

        Command::TrainTlsr { config, seed, out, fixed_tau } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            if fixed_tau.is_some() {
                cfg.tlsr.fixed_tau = fixed_tau;
            }
            std::fs::create_dir_all(&cfg.out_dir)?;
            let (train_images, _) = load_train_val(&cfg)?;
            let t0 = std::time::Instant::now();
            let (model, log) =
                tlsr_train::<f32>(&cfg.tlsr, &train_images, SeedTree::new(cfg.seed))?;
            let suffix = match cfg.tlsr.fixed_tau {
                Some(t) => format!("baseline_tau{t:.2}"),
                None => "tlsr".to_string(),
            };
            let ckpt_path = cfg
                .out_dir
                .join(format!("{suffix}_{}_x{}.ckpt", cfg.tlsr.family.as_str(), cfg.tlsr.scale));
            model.to_checkpoint().save(&ckpt_path)?;
            let mut csv = String::from("step,loss\n");
            for (i, l) in log.losses.iter().enumerate() {
                csv.push_str(&format!("{},{l:.6}\n", i + 1));
            }
            std::fs::write(cfg.out_dir.join(format!("train_{suffix}_loss.csv")), csv)?;
            println!(
                "trained {} in {:.1}s ({} steps); final loss {:.5}; checkpoint {}",
                suffix,
                t0.elapsed().as_secs_f64(),
                log.losses.len(),
                log.losses.last().unwrap_or(&f64::NAN),
                ckpt_path.display()
            );
            Ok(())
        }

        Command::Eval { config, mode, tau, sr_checkpoint, dot_checkpoint, data, seed, out } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            std::fs::create_dir_all(&cfg.out_dir)?;
            let dir = data
                .or_else(|| cfg.val_dir.clone())
                .unwrap_or_else(|| cfg.data_dir.clone());
            let (handle, warnings) = ingest_dataset(&dir, cfg.tlsr.scale, None)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            let images = handle.load_images()?;
            let ids: Vec<String> = handle
                .entries
                .iter()
                .map(|e| {
                    e.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
                })
                .collect();
            let sampler = cfg.sampler();
            let snapshot = cfg.to_text();
            let seed_tree = SeedTree::new(cfg.seed);

            let mut sr_model;
            let mut dot_model;
            let report = match mode.as_str() {
                "bicubic" => run_eval::<f32>(
                    &images,
                    &ids,
                    &sampler,
                    &cfg.eval_levels,
                    SrMethod::Bicubic,
                    seed_tree,
                    snapshot,
                )?,
                "oracle" => {
                    let path = sr_checkpoint
                        .ok_or_else(|| Error::InvalidArg("--sr-checkpoint required".into()))?;
                    sr_model = TlsrModel::<f32>::from_checkpoint(&Checkpoint::load(&path)?)?;
                    run_eval(
                        &images,
                        &ids,
                        &sampler,
                        &cfg.eval_levels,
                        SrMethod::OracleTau(&mut sr_model),
                        seed_tree,
                        snapshot,
                    )?
                }
                "fixed" => {
                    let path = sr_checkpoint
                        .ok_or_else(|| Error::InvalidArg("--sr-checkpoint required".into()))?;
                    sr_model = TlsrModel::<f32>::from_checkpoint(&Checkpoint::load(&path)?)?;
                    run_eval(
                        &images,
                        &ids,
                        &sampler,
                        &cfg.eval_levels,
                        SrMethod::FixedTau(&mut sr_model, tau),
                        seed_tree,
                        snapshot,
                    )?
                }
                "blind" => {
                    let sp = sr_checkpoint
                        .ok_or_else(|| Error::InvalidArg("--sr-checkpoint required".into()))?;
                    let dp = dot_checkpoint
                        .ok_or_else(|| Error::InvalidArg("--dot-checkpoint required".into()))?;
                    sr_model = TlsrModel::<f32>::from_checkpoint(&Checkpoint::load(&sp)?)?;
                    let (dot, dot_family, _) = DoTNet::<f32>::from_checkpoint(&Checkpoint::load(&dp)?)?;
                    if dot_family != sr_model.family {
                        return Err(Error::Data("SR and DoT checkpoint families differ".into()));
                    }
                    dot_model = dot;
                    run_eval(
                        &images,
                        &ids,
                        &sampler,
                        &cfg.eval_levels,
                        SrMethod::Blind(&mut sr_model, &mut dot_model),
                        seed_tree,
                        snapshot,
                    )?
                }
                other => return Err(Error::InvalidArg(format!("unknown eval mode '{other}'"))),
            };

            let stem = format!("eval_{}_{}_x{}", report.method, cfg.tlsr.family.as_str(), cfg.tlsr.scale);
            std::fs::write(cfg.out_dir.join(format!("{stem}_images.csv")), report.image_csv())?;
            std::fs::write(cfg.out_dir.join(format!("{stem}_levels.csv")), report.level_csv())?;
            std::fs::write(cfg.out_dir.join(format!("{stem}_meta.txt")), report.meta_text())?;
            let series = series_from_level_csv(&report.method, &report.level_csv())?;
            std::fs::write(
                cfg.out_dir.join(format!("{stem}.svg")),
                psnr_curve_svg("PSNR vs degradation level", &[series])?,
            )?;
            println!(
                "{}: overall PSNR {:.2} dB, SSIM {:.4} over {} rows -> {}",
                report.method,
                report.overall_psnr,
                report.overall_ssim,
                report.rows.len(),
                cfg.out_dir.display()
            );
            Ok(())
        }

        Command::Sr { input, out, sr_checkpoint, dot_checkpoint, seed } => {
            let img = read_png(&input)?;
            let mut model = TlsrModel::<f32>::from_checkpoint(&Checkpoint::load(&sr_checkpoint)?)?;
            let (mut dot, dot_family, _) =
                DoTNet::<f32>::from_checkpoint(&Checkpoint::load(&dot_checkpoint)?)?;
            let (y, tau) =
                tlsr_infer(&img, &mut model, &mut dot, dot_family, &mut SeedTree::new(seed).rng("crops"))?;
            write_png(&y.clamp01(), &out)?;
            println!(
                "sr {} ({}x{}) -> {} ({}x{}), estimated tau {:.4}",
                input.display(),
                img.width,
                img.height,
                out.display(),
                y.width,
                y.height,
                tau.value()
            );
            Ok(())
        }

        Command::SrReal { input, out, denoise_sr, denoise_dot, deblur_sr, deblur_dot, seed } => {
            let img = read_png(&input)?;
            let mut n_model = TlsrModel::<f32>::from_checkpoint(&Checkpoint::load(&denoise_sr)?)?;
            let (mut n_dot, n_family, _) =
                DoTNet::<f32>::from_checkpoint(&Checkpoint::load(&denoise_dot)?)?;
            let mut b_model = TlsrModel::<f32>::from_checkpoint(&Checkpoint::load(&deblur_sr)?)?;
            let (mut b_dot, b_family, _) =
                DoTNet::<f32>::from_checkpoint(&Checkpoint::load(&deblur_dot)?)?;
            if n_family != n_model.family || b_family != b_model.family {
                return Err(Error::Data("checkpoint family mismatch within a stage".into()));
            }
            let y = tlsr_real(
                &img,
                (&mut n_model, &mut n_dot),
                (&mut b_model, &mut b_dot),
                &mut SeedTree::new(seed).rng("real"),
            )?;
            write_png(&y.clamp01(), &out)?;
            println!("sr-real {} -> {} ({}x{})", input.display(), out.display(), y.width, y.height);
            Ok(())
        }

        Command::Report { csvs, out, title } => {
            let mut series: Vec<Series> = Vec::new();
            for spec in &csvs {
                let (label, path) = spec
                    .split_once('=')
                    .ok_or_else(|| Error::InvalidArg(format!("--csv expects label=path, got '{spec}'")))?;
                let text = std::fs::read_to_string(Path::new(path))?;
                series.push(series_from_level_csv(label, &text)?);
            }
            std::fs::write(&out, psnr_curve_svg(&title, &series)?)?;
            println!("wrote {}", out.display());
            Ok(())
        }

        Command::SynthData { out, count, size, seed } => {
            std::fs::create_dir_all(&out)?;
            for (i, img) in synth_dataset(count, size, size, seed).iter().enumerate() {
                write_png(img, &out.join(format!("synth_{i:03}.png")))?;
            }
            println!("wrote {count} {size}x{size} images to {}", out.display());
            Ok(())
        }
    }
}

/// Load training and validation image sets per the config (validation falls
/// back to the training directory).
fn load_train_val(cfg: &RunConfig) -> Result<(Vec<Image>, Vec<Image>)> {
    let (train_handle, warnings) = ingest_dataset(&cfg.data_dir, cfg.tlsr.scale, None)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let train = train_handle.load_images()?;
    let val = match &cfg.val_dir {
        Some(dir) => {
            let (handle, warnings) = ingest_dataset(dir, cfg.tlsr.scale, None)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            handle.load_images()?
        }
        None => train.clone(),
    };
    Ok((train, val))
}

