//! Degradation synthesis and analytic transition states.
//!
//! An LR observation is modeled as `x = (y ⊗ B) ↓s + N`: blur by a kernel,
//! bicubic downsampling, additive white Gaussian noise. Between two *primary*
//! degradations (weak/strong endpoints of one family) every intermediate
//! degradation is a *transition state* located by a scalar τ ∈ [0, 1], the
//! degree of transitionality (DoT).
//!
//! τ orientation: the additive mixture [`additive_transition`] keeps the
//! literal convention where τ weights the *first* state. Everywhere else the
//! crate uses one canonical orientation — τ = 0 ⇔ weakest degradation,
//! τ = 1 ⇔ strongest — which is what [`dot_ground_truth`] produces and what
//! the SR/DoT networks consume.

mod degrade;
mod kernel;
mod noise;

pub use degrade::{convolve, degrade};
pub use kernel::{anisotropic_kernel, gaussian_kernel, transition_kernel, Kernel, KernelFamily};
pub use noise::{synthesize_noise, NoiseField};

use crate::error::{invalid, Result};
use crate::imaging::Image;

/// Degree of transitionality, a scalar in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DoT(f64);

impl DoT {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) || value.is_nan() {
            return Err(invalid(format!("DoT {value} outside [0, 1]")));
        }
        Ok(DoT(value))
    }

    /// Clamp an estimate into the valid range.
    pub fn clamped(value: f64) -> Self {
        DoT(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Which parameter of the degradation is transitional.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegradationFamily {
    /// AWGN level varies, blur fixed.
    Additive,
    /// Isotropic blur sigma varies, noise fixed.
    Convolutive,
    /// Anisotropic blur rotation angle varies, axis sigmas fixed.
    AnisotropicAngle,
}

impl DegradationFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            DegradationFamily::Additive => "additive",
            DegradationFamily::Convolutive => "convolutive",
            DegradationFamily::AnisotropicAngle => "anisotropic-angle",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "additive" | "noise" => Ok(DegradationFamily::Additive),
            "convolutive" | "blur" => Ok(DegradationFamily::Convolutive),
            "anisotropic-angle" | "angle" => Ok(DegradationFamily::AnisotropicAngle),
            other => Err(invalid(format!("unknown degradation family '{other}'"))),
        }
    }
}

/// A fully specified degradation: scale factor, blur kernel, noise level,
/// plus the bounds of the one transitional parameter of its family.
#[derive(Debug, Clone)]
pub struct DegradationSpec {
    pub scale: usize,
    pub kernel: Kernel,
    /// AWGN standard deviation in 8-bit intensity units (0–30).
    pub noise_level: f64,
    pub family: DegradationFamily,
    /// (param_min, param_max) for the active transitional parameter.
    pub family_bounds: (f64, f64),
}

impl DegradationSpec {
    /// Convolutive family: isotropic blur sigma is the transitional parameter.
    pub fn convolutive(
        scale: usize,
        sigma: f64,
        bounds: (f64, f64),
        kernel_size: usize,
    ) -> Result<Self> {
        Ok(Self {
            scale,
            kernel: gaussian_kernel(sigma, kernel_size)?,
            noise_level: 0.0,
            family: DegradationFamily::Convolutive,
            family_bounds: bounds,
        })
    }

    /// Additive family: noise level is the transitional parameter; blur is a
    /// fixed mild kernel (sigma defaults to 0.2 as in the mixed benchmarks).
    pub fn additive(
        scale: usize,
        noise_level: f64,
        level_max: f64,
        fixed_sigma: f64,
        kernel_size: usize,
    ) -> Result<Self> {
        Ok(Self {
            scale,
            kernel: gaussian_kernel(fixed_sigma, kernel_size)?,
            noise_level,
            family: DegradationFamily::Additive,
            family_bounds: (0.0, level_max),
        })
    }

    /// Anisotropic family: rotation angle is the transitional parameter.
    pub fn anisotropic(
        scale: usize,
        sigma_u: f64,
        sigma_v: f64,
        theta: f64,
        bounds: (f64, f64),
        kernel_size: usize,
    ) -> Result<Self> {
        Ok(Self {
            scale,
            kernel: anisotropic_kernel(sigma_u, sigma_v, theta, kernel_size)?,
            noise_level: 0.0,
            family: DegradationFamily::AnisotropicAngle,
            family_bounds: bounds,
        })
    }

    /// The value of the active transitional parameter.
    pub fn active_param(&self) -> Result<f64> {
        match self.family {
            DegradationFamily::Additive => Ok(self.noise_level),
            DegradationFamily::Convolutive => match self.kernel.family {
                KernelFamily::IsotropicGaussian { sigma } => Ok(sigma),
                KernelFamily::Delta => Ok(0.0),
                _ => Err(invalid("convolutive family requires an isotropic kernel".to_string())),
            },
            DegradationFamily::AnisotropicAngle => match self.kernel.family {
                KernelFamily::AnisotropicGaussian { theta, .. } => Ok(theta),
                _ => Err(invalid("angle family requires an anisotropic kernel".to_string())),
            },
        }
    }
}

/// Ground-truth DoT of a degradation under the canonical orientation: the
/// active parameter mapped linearly from its family bounds onto [0, 1].
/// Collapsed bounds (a one-level degenerate family) map to τ = 0.5.
pub fn dot_ground_truth(spec: &DegradationSpec) -> Result<DoT> {
    let param = spec.active_param()?;
    let (lo, hi) = spec.family_bounds;
    if param < lo - 1e-12 || param > hi + 1e-12 {
        return Err(invalid(format!("parameter {param} outside family bounds [{lo}, {hi}]")));
    }
    if hi - lo <= 0.0 {
        return DoT::new(0.5);
    }
    DoT::new(((param - lo) / (hi - lo)).clamp(0.0, 1.0))
}

/// Draws degradations of one family with the transitional parameter uniform
/// over the family bounds — the training-time distribution.
#[derive(Debug, Clone)]
pub struct DegradationSampler {
    pub family: DegradationFamily,
    pub bounds: (f64, f64),
    pub scale: usize,
    pub kernel_size: usize,
    /// Fixed mild blur applied by the additive family.
    pub additive_fixed_sigma: f64,
    /// Fixed axis sigmas of the anisotropic-angle family.
    pub aniso_sigma_u: f64,
    pub aniso_sigma_v: f64,
}

impl DegradationSampler {
    pub fn new(family: DegradationFamily, bounds: (f64, f64), scale: usize, kernel_size: usize) -> Self {
        DegradationSampler {
            family,
            bounds,
            scale,
            kernel_size,
            additive_fixed_sigma: 0.2,
            aniso_sigma_u: 1.3,
            aniso_sigma_v: 3.25,
        }
    }

    /// The spec realizing a given value of the transitional parameter.
    pub fn spec_for(&self, param: f64) -> Result<DegradationSpec> {
        let kernel = match self.family {
            DegradationFamily::Additive => gaussian_kernel(self.additive_fixed_sigma, self.kernel_size)?,
            DegradationFamily::Convolutive => gaussian_kernel(param.max(1e-6), self.kernel_size)?,
            DegradationFamily::AnisotropicAngle => {
                anisotropic_kernel(self.aniso_sigma_u, self.aniso_sigma_v, param, self.kernel_size)?
            }
        };
        Ok(DegradationSpec {
            scale: self.scale,
            kernel,
            noise_level: if self.family == DegradationFamily::Additive { param } else { 0.0 },
            family: self.family,
            family_bounds: self.bounds,
        })
    }

    /// Uniform draw of the transitional parameter with its ground-truth DoT.
    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> Result<(DegradationSpec, DoT)> {
        let (lo, hi) = self.bounds;
        let param = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        let spec = self.spec_for(param)?;
        let tau = dot_ground_truth(&spec)?;
        Ok((spec, tau))
    }
}

/// Mixture of two degraded observations with τ weighting the *first* state:
/// `τ·x0 + (1−τ)·x1`.
pub fn additive_transition(x0: &Image, x1: &Image, tau: DoT) -> Result<Image> {
    if !x0.same_shape(x1) {
        return Err(crate::error::shape_mismatch(
            "additive_transition: operand shapes differ".to_string(),
        ));
    }
    let t = tau.value();
    let data = x0.data.iter().zip(&x1.data).map(|(a, b)| t * a + (1.0 - t) * b).collect();
    Image::new(x0.height, x0.width, x0.channels, data)
}
