//! Flat key=value run configuration shared by the CLI subcommands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::degradation::{DegradationFamily, DegradationSampler};
use crate::dotnet::{DoTNetConfig, DotTrainConfig};
use crate::error::{invalid, Error, Result};
use crate::tlsr::TlsrConfig;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub tlsr: TlsrConfig,
    pub seed: u64,
    pub data_dir: PathBuf,
    pub val_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub eval_levels: Vec<f64>,
    pub dot_patch_count: usize,
    pub dot_patch_size: usize,
    pub dot_blocks: usize,
    pub dot_stem_channels: usize,
    pub dot_bottleneck_channels: usize,
    pub dot_fc_hidden: usize,
    pub dot_pools: Vec<usize>,
    pub dot_steps: u64,
    pub dot_batch_images: usize,
    pub dot_lr: f64,
    pub dot_lr_halve_every: u64,
    pub dot_val_every: u64,
}

/// The discrete evaluation grid conventionally used per family and scale.
pub fn default_eval_levels(family: DegradationFamily, scale: usize) -> Vec<f64> {
    match family {
        DegradationFamily::Additive => vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
        DegradationFamily::Convolutive => {
            if scale >= 4 {
                vec![0.2, 1.0, 2.0, 3.0, 4.0]
            } else {
                vec![0.2, 0.5, 1.0, 1.5, 2.0]
            }
        }
        DegradationFamily::AnisotropicAngle => {
            use std::f64::consts::PI;
            vec![0.0, PI / 6.0, PI / 4.0, PI / 3.0, PI / 2.0]
        }
    }
}

impl RunConfig {
    pub fn new(family: DegradationFamily, scale: usize) -> Self {
        RunConfig {
            tlsr: TlsrConfig::desk(family, scale),
            seed: 7,
            data_dir: PathBuf::from("data/train"),
            val_dir: None,
            out_dir: PathBuf::from("out"),
            eval_levels: default_eval_levels(family, scale),
            dot_patch_count: 8,
            dot_patch_size: 32,
            dot_blocks: 4,
            dot_stem_channels: 16,
            dot_bottleneck_channels: 8,
            dot_fc_hidden: 32,
            dot_pools: vec![2, 2, 2, 2],
            dot_steps: 2000,
            dot_batch_images: 8,
            dot_lr: 1e-3,
            dot_lr_halve_every: 1000,
            dot_val_every: 500,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        // family and scale first so defaults adjust to them
        let mut family = DegradationFamily::Additive;
        let mut scale = 2usize;
        let mut eval_levels_set = false;
        for (key, value) in iter_pairs(text)? {
            match key.as_str() {
                "family" => family = DegradationFamily::parse(&value)?,
                "scale" => scale = parse_num(&key, &value)?,
                _ => {}
            }
        }
        let mut cfg = RunConfig::new(family, scale);
        for (key, value) in iter_pairs(text)? {
            match key.as_str() {
                "family" | "scale" => {}
                "param_min" => cfg.tlsr.param_min = parse_num(&key, &value)?,
                "param_max" => cfg.tlsr.param_max = parse_num(&key, &value)?,
                "trunk_blocks" => cfg.tlsr.trunk_blocks = parse_num(&key, &value)?,
                "channels" => cfg.tlsr.channels = parse_num(&key, &value)?,
                "transitional_blocks" => cfg.tlsr.transitional_blocks = parse_num(&key, &value)?,
                "kernel_size" => cfg.tlsr.kernel_size = parse_num(&key, &value)?,
                "lr" => cfg.tlsr.lr = parse_num(&key, &value)?,
                "lr_halve_every" => cfg.tlsr.lr_halve_every = parse_num(&key, &value)?,
                "steps" => cfg.tlsr.steps = parse_num(&key, &value)?,
                "batch" => cfg.tlsr.batch = parse_num(&key, &value)?,
                "lr_patch" => cfg.tlsr.lr_patch = parse_num(&key, &value)?,
                "fixed_tau" => {
                    cfg.tlsr.fixed_tau =
                        if value.is_empty() { None } else { Some(parse_num(&key, &value)?) }
                }
                "additive_fixed_sigma" => cfg.tlsr.additive_fixed_sigma = parse_num(&key, &value)?,
                "aniso_sigma_u" => cfg.tlsr.aniso_sigma_u = parse_num(&key, &value)?,
                "aniso_sigma_v" => cfg.tlsr.aniso_sigma_v = parse_num(&key, &value)?,
                "seed" => cfg.seed = parse_num(&key, &value)?,
                "data_dir" => cfg.data_dir = PathBuf::from(value),
                "val_dir" => {
                    cfg.val_dir = if value.is_empty() { None } else { Some(PathBuf::from(value)) }
                }
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                "eval_levels" => {
                    cfg.eval_levels = parse_list(&key, &value)?;
                    eval_levels_set = true;
                }
                "dot_patch_count" => cfg.dot_patch_count = parse_num(&key, &value)?,
                "dot_patch_size" => cfg.dot_patch_size = parse_num(&key, &value)?,
                "dot_blocks" => cfg.dot_blocks = parse_num(&key, &value)?,
                "dot_stem_channels" => cfg.dot_stem_channels = parse_num(&key, &value)?,
                "dot_bottleneck_channels" => {
                    cfg.dot_bottleneck_channels = parse_num(&key, &value)?
                }
                "dot_fc_hidden" => cfg.dot_fc_hidden = parse_num(&key, &value)?,
                "dot_pools" => {
                    cfg.dot_pools = parse_list::<usize>(&key, &value)?;
                }
                "dot_steps" => cfg.dot_steps = parse_num(&key, &value)?,
                "dot_batch_images" => cfg.dot_batch_images = parse_num(&key, &value)?,
                "dot_lr" => cfg.dot_lr = parse_num(&key, &value)?,
                "dot_lr_halve_every" => cfg.dot_lr_halve_every = parse_num(&key, &value)?,
                "dot_val_every" => cfg.dot_val_every = parse_num(&key, &value)?,
                other => return Err(invalid(format!("unknown config key '{other}'"))),
            }
        }
        if !eval_levels_set {
            cfg.eval_levels = default_eval_levels(cfg.tlsr.family, cfg.tlsr.scale);
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "family = {}", self.tlsr.family.as_str()).unwrap();
        writeln!(out, "param_min = {}", self.tlsr.param_min).unwrap();
        writeln!(out, "param_max = {}", self.tlsr.param_max).unwrap();
        writeln!(out, "scale = {}", self.tlsr.scale).unwrap();
        writeln!(out, "trunk_blocks = {}", self.tlsr.trunk_blocks).unwrap();
        writeln!(out, "channels = {}", self.tlsr.channels).unwrap();
        writeln!(out, "transitional_blocks = {}", self.tlsr.transitional_blocks).unwrap();
        writeln!(out, "kernel_size = {}", self.tlsr.kernel_size).unwrap();
        writeln!(out, "lr = {}", self.tlsr.lr).unwrap();
        writeln!(out, "lr_halve_every = {}", self.tlsr.lr_halve_every).unwrap();
        writeln!(out, "steps = {}", self.tlsr.steps).unwrap();
        writeln!(out, "batch = {}", self.tlsr.batch).unwrap();
        writeln!(out, "lr_patch = {}", self.tlsr.lr_patch).unwrap();
        match self.tlsr.fixed_tau {
            Some(t) => writeln!(out, "fixed_tau = {t}").unwrap(),
            None => writeln!(out, "fixed_tau =").unwrap(),
        }
        writeln!(out, "additive_fixed_sigma = {}", self.tlsr.additive_fixed_sigma).unwrap();
        writeln!(out, "aniso_sigma_u = {}", self.tlsr.aniso_sigma_u).unwrap();
        writeln!(out, "aniso_sigma_v = {}", self.tlsr.aniso_sigma_v).unwrap();
        writeln!(out, "seed = {}", self.seed).unwrap();
        writeln!(out, "data_dir = {}", self.data_dir.display()).unwrap();
        match &self.val_dir {
            Some(d) => writeln!(out, "val_dir = {}", d.display()).unwrap(),
            None => writeln!(out, "val_dir =").unwrap(),
        }
        writeln!(out, "out_dir = {}", self.out_dir.display()).unwrap();
        writeln!(
            out,
            "eval_levels = {}",
            self.eval_levels.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        )
        .unwrap();
        writeln!(out, "dot_patch_count = {}", self.dot_patch_count).unwrap();
        writeln!(out, "dot_patch_size = {}", self.dot_patch_size).unwrap();
        writeln!(out, "dot_blocks = {}", self.dot_blocks).unwrap();
        writeln!(out, "dot_stem_channels = {}", self.dot_stem_channels).unwrap();
        writeln!(out, "dot_bottleneck_channels = {}", self.dot_bottleneck_channels).unwrap();
        writeln!(out, "dot_fc_hidden = {}", self.dot_fc_hidden).unwrap();
        writeln!(
            out,
            "dot_pools = {}",
            self.dot_pools.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        )
        .unwrap();
        writeln!(out, "dot_steps = {}", self.dot_steps).unwrap();
        writeln!(out, "dot_batch_images = {}", self.dot_batch_images).unwrap();
        writeln!(out, "dot_lr = {}", self.dot_lr).unwrap();
        writeln!(out, "dot_lr_halve_every = {}", self.dot_lr_halve_every).unwrap();
        writeln!(out, "dot_val_every = {}", self.dot_val_every).unwrap();
        out
    }

    pub fn sampler(&self) -> DegradationSampler {
        self.tlsr.sampler()
    }

    pub fn dotnet_config(&self) -> DoTNetConfig {
        DoTNetConfig {
            patch_count: self.dot_patch_count,
            patch_size: self.dot_patch_size,
            bottleneck_blocks: self.dot_blocks,
            stem_channels: self.dot_stem_channels,
            bottleneck_channels: self.dot_bottleneck_channels,
            fc_hidden: self.dot_fc_hidden,
            pools: self.dot_pools.clone(),
        }
    }

    pub fn dot_train_config(&self) -> DotTrainConfig {
        DotTrainConfig {
            net: self.dotnet_config(),
            sampler: self.sampler(),
            batch_images: self.dot_batch_images,
            steps: self.dot_steps,
            lr: self.dot_lr,
            lr_halve_every: self.dot_lr_halve_every,
            val_every: self.dot_val_every,
        }
    }
}

fn iter_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Data(format!("config line without '=': {raw}")))?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| invalid(format!("config key '{key}': bad value '{value}'")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|t| parse_num(key, t.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_text() {
        let mut cfg = RunConfig::new(DegradationFamily::Convolutive, 4);
        cfg.tlsr.steps = 1234;
        cfg.tlsr.fixed_tau = Some(0.5);
        cfg.seed = 99;
        let text = cfg.to_text();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back.tlsr.steps, 1234);
        assert_eq!(back.tlsr.fixed_tau, Some(0.5));
        assert_eq!(back.seed, 99);
        assert_eq!(back.eval_levels, vec![0.2, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn comments_and_unknown_keys() {
        let ok = RunConfig::parse("family = additive # noise family\nscale = 2\n").unwrap();
        assert_eq!(ok.tlsr.family, DegradationFamily::Additive);
        assert_eq!(ok.eval_levels.len(), 7);
        assert!(RunConfig::parse("no_such_key = 1\n").is_err());
        assert!(RunConfig::parse("just a line\n").is_err());
    }
}
