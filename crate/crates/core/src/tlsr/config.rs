//! Network and schedule hyperparameters.

use crate::degradation::{DegradationFamily, DegradationSampler};
use crate::error::{invalid, Result};

/// Desk-scale defaults train in minutes on a laptop CPU; the full-scale
/// configuration (n=32, c=128, m=8, 3e5 steps) stays expressible.
#[derive(Debug, Clone)]
pub struct TlsrConfig {
    pub family: DegradationFamily,
    pub param_min: f64,
    pub param_max: f64,
    pub scale: usize,
    /// Homogeneous trunk depth (n).
    pub trunk_blocks: usize,
    /// Feature width (c).
    pub channels: usize,
    /// Transitional block count (m).
    pub transitional_blocks: usize,
    /// Blur kernel size used when synthesizing degradations.
    pub kernel_size: usize,
    pub lr: f64,
    pub lr_halve_every: u64,
    pub steps: u64,
    pub batch: usize,
    /// LR-space crop side during training.
    pub lr_patch: usize,
    /// Train at one fixed τ (and the matching fixed parameter) instead of
    /// sampling — this is how the single-primary baselines are produced.
    pub fixed_tau: Option<f64>,
    /// Fixed blur sigma of the additive family.
    pub additive_fixed_sigma: f64,
    /// Fixed axis sigmas of the anisotropic-angle family.
    pub aniso_sigma_u: f64,
    pub aniso_sigma_v: f64,
}

impl TlsrConfig {
    /// Desk-scale defaults: n=4, c=16, m=2.
    pub fn desk(family: DegradationFamily, scale: usize) -> Self {
        let (param_min, param_max) = match family {
            DegradationFamily::Additive => (0.0, 30.0),
            DegradationFamily::Convolutive => {
                if scale >= 4 {
                    (0.2, 4.0)
                } else {
                    (0.2, 2.0)
                }
            }
            DegradationFamily::AnisotropicAngle => (0.0, std::f64::consts::FRAC_PI_2),
        };
        TlsrConfig {
            family,
            param_min,
            param_max,
            scale,
            trunk_blocks: 4,
            channels: 16,
            transitional_blocks: 2,
            kernel_size: 13,
            lr: 1e-3,
            lr_halve_every: 2000,
            steps: 5000,
            batch: 4,
            lr_patch: 32,
            fixed_tau: None,
            additive_fixed_sigma: 0.2,
            aniso_sigma_u: 1.3,
            aniso_sigma_v: 3.25,
        }
    }

    /// The paper-scale configuration (expressible, not runnable at desk).
    pub fn paper(family: DegradationFamily, scale: usize) -> Self {
        TlsrConfig {
            trunk_blocks: 32,
            channels: 128,
            transitional_blocks: 8,
            kernel_size: 21,
            lr: 2e-4,
            lr_halve_every: 100_000,
            steps: 300_000,
            batch: 16,
            lr_patch: 48,
            ..Self::desk(family, scale)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale == 0
            || self.trunk_blocks == 0
            || self.channels == 0
            || self.transitional_blocks == 0
        {
            return Err(invalid("n, c, m, s must all be >= 1".to_string()));
        }
        if self.fixed_tau.is_none() && self.param_max <= self.param_min {
            return Err(invalid(format!(
                "family bounds [{}, {}] do not span a transition",
                self.param_min, self.param_max
            )));
        }
        if let Some(t) = self.fixed_tau {
            if !(0.0..=1.0).contains(&t) {
                return Err(invalid(format!("fixed tau {t} outside [0, 1]")));
            }
        }
        if self.lr_patch < self.kernel_size && self.family != DegradationFamily::Additive {
            return Err(invalid(format!(
                "training crop {} smaller than blur kernel {}",
                self.lr_patch, self.kernel_size
            )));
        }
        Ok(())
    }

    pub fn sampler(&self) -> DegradationSampler {
        let mut s = DegradationSampler::new(
            self.family,
            (self.param_min, self.param_max),
            self.scale,
            self.kernel_size,
        );
        s.additive_fixed_sigma = self.additive_fixed_sigma;
        s.aniso_sigma_u = self.aniso_sigma_u;
        s.aniso_sigma_v = self.aniso_sigma_v;
        s
    }
}
