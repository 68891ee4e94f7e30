//! Blur kernels: isotropic/anisotropic Gaussians and their transition states.
//!
//! Transition kernels are computed in the log domain: the elementwise product
//! `(B⁰)^{σ₀²/2σ_τ²} · (B¹)^{σ₁²/2σ_τ²}` underflows badly for small sigmas if
//! evaluated naively, while its logarithm is a plain quadratic in the grid
//! radius. The scheme's normalization constant is absorbed by renormalizing
//! the kernel to sum 1.

use std::fmt::Write as _;
use std::path::Path;

use super::DoT;
use crate::error::{invalid, Error, Result};

/// Sigma used when a blur-free primary (σ₀ = 0) is requested: the delta limit.
pub const BLUR_FREE_SIGMA: f64 = 1e-6;

/// Generating parameters of a [`Kernel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    IsotropicGaussian { sigma: f64 },
    AnisotropicGaussian { sigma_u: f64, sigma_v: f64, theta: f64 },
    Delta,
}

/// Normalized 2-D blur kernel on a centered odd-sized grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub size: usize,
    pub values: Vec<f64>,
    pub family: KernelFamily,
}

impl Kernel {
    /// Value at centered offsets (dy, dx) ∈ [-size/2, size/2].
    pub fn at(&self, dy: i64, dx: i64) -> f64 {
        let half = (self.size / 2) as i64;
        self.values[((dy + half) * self.size as i64 + (dx + half)) as usize]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Second moment E[i² + j²] of the normalized kernel — grows with blur.
    pub fn second_moment(&self) -> f64 {
        let half = (self.size / 2) as i64;
        let mut acc = 0.0;
        for dy in -half..=half {
            for dx in -half..=half {
                acc += self.at(dy, dx) * (dy * dy + dx * dx) as f64;
            }
        }
        acc
    }

    /// Identity kernel of the given odd size.
    pub fn delta(size: usize) -> Result<Self> {
        check_size(size)?;
        let mut values = vec![0.0; size * size];
        values[(size / 2) * size + size / 2] = 1.0;
        Ok(Kernel { size, values, family: KernelFamily::Delta })
    }

    pub fn max_abs_diff(&self, other: &Kernel) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Plain-text export: header `w family params…`, then w rows of w values.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self.family {
            KernelFamily::IsotropicGaussian { sigma } => {
                writeln!(out, "{} isotropic {:.17e}", self.size, sigma).unwrap();
            }
            KernelFamily::AnisotropicGaussian { sigma_u, sigma_v, theta } => {
                writeln!(
                    out,
                    "{} anisotropic {:.17e} {:.17e} {:.17e}",
                    self.size, sigma_u, sigma_v, theta
                )
                .unwrap();
            }
            KernelFamily::Delta => writeln!(out, "{} delta", self.size).unwrap(),
        }
        for row in self.values.chunks(self.size) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Data("empty kernel file".to_string()))?;
        let mut head = header.split_whitespace();
        let size: usize = head
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Data("kernel header missing size".to_string()))?;
        check_size(size)?;
        let family = match head.next() {
            Some("isotropic") => KernelFamily::IsotropicGaussian {
                sigma: parse_f64(head.next(), "sigma")?,
            },
            Some("anisotropic") => KernelFamily::AnisotropicGaussian {
                sigma_u: parse_f64(head.next(), "sigma_u")?,
                sigma_v: parse_f64(head.next(), "sigma_v")?,
                theta: parse_f64(head.next(), "theta")?,
            },
            Some("delta") => KernelFamily::Delta,
            other => return Err(Error::Data(format!("unknown kernel family {other:?}"))),
        };
        let mut values = Vec::with_capacity(size * size);
        for line in lines.take(size) {
            for tok in line.split_whitespace() {
                values.push(
                    tok.parse::<f64>()
                        .map_err(|e| Error::Data(format!("bad kernel value '{tok}': {e}")))?,
                );
            }
        }
        if values.len() != size * size {
            return Err(Error::Data(format!(
                "kernel body has {} values, expected {}",
                values.len(),
                size * size
            )));
        }
        Ok(Kernel { size, values, family })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn parse_f64(tok: Option<&str>, what: &str) -> Result<f64> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Data(format!("kernel header missing {what}")))
}

fn check_size(size: usize) -> Result<()> {
    if size == 0 || size % 2 == 0 {
        return Err(invalid(format!("kernel size must be odd and positive, got {size}")));
    }
    Ok(())
}

fn normalize(values: &mut [f64]) {
    let sum: f64 = values.iter().sum();
    for v in values {
        *v /= sum;
    }
}

/// Isotropic Gaussian kernel: values(i,j) ∝ exp(−(i²+j²)/(2σ²)) on the
/// centered integer grid, normalized to sum 1.
pub fn gaussian_kernel(sigma: f64, size: usize) -> Result<Kernel> {
    if !(sigma > 0.0) {
        return Err(invalid(format!("sigma must be positive, got {sigma}")));
    }
    check_size(size)?;
    let half = (size / 2) as i64;
    let mut values = Vec::with_capacity(size * size);
    for dy in -half..=half {
        for dx in -half..=half {
            let r2 = (dy * dy + dx * dx) as f64;
            values.push((-r2 / (2.0 * sigma * sigma)).exp());
        }
    }
    normalize(&mut values);
    Ok(Kernel { size, values, family: KernelFamily::IsotropicGaussian { sigma } })
}

/// Anisotropic Gaussian: values ∝ exp(−½ pᵀ Σ⁻¹ p) with
/// Σ = R(θ)·diag(σᵤ², σᵥ²)·R(θ)ᵀ, p = (x, y) in column/row offsets and the
/// u-axis at angle θ from the horizontal.
pub fn anisotropic_kernel(sigma_u: f64, sigma_v: f64, theta: f64, size: usize) -> Result<Kernel> {
    if !(sigma_u > 0.0) || !(sigma_v > 0.0) {
        return Err(invalid(format!("axis sigmas must be positive, got ({sigma_u}, {sigma_v})")));
    }
    check_size(size)?;
    let (sin_t, cos_t) = theta.sin_cos();
    let half = (size / 2) as i64;
    let mut values = Vec::with_capacity(size * size);
    for dy in -half..=half {
        for dx in -half..=half {
            let (x, y) = (dx as f64, dy as f64);
            // coordinates in the rotated (u, v) frame
            let u = cos_t * x + sin_t * y;
            let v = -sin_t * x + cos_t * y;
            let q = u * u / (sigma_u * sigma_u) + v * v / (sigma_v * sigma_v);
            values.push((-0.5 * q).exp());
        }
    }
    normalize(&mut values);
    Ok(Kernel { size, values, family: KernelFamily::AnisotropicGaussian { sigma_u, sigma_v, theta } })
}

/// Transition state between two isotropic Gaussian primaries:
/// values(i,j) ∝ (B⁰(i,j))^{σ₀²/2σ_τ²} · (B¹(i,j))^{σ₁²/2σ_τ²} with
/// σ_τ = (1−τ)σ₀ + τσ₁, evaluated in log domain and renormalized.
/// σ₀ = 0 is treated as the blur-free delta limit.
pub fn transition_kernel(sigma0: f64, sigma1: f64, tau: DoT, size: usize) -> Result<Kernel> {
    if sigma0 < 0.0 {
        return Err(invalid(format!("sigma0 must be nonnegative, got {sigma0}")));
    }
    if !(sigma1 > sigma0) {
        return Err(invalid(format!("need sigma1 > sigma0, got ({sigma0}, {sigma1})")));
    }
    check_size(size)?;
    let s0 = if sigma0 == 0.0 { BLUR_FREE_SIGMA } else { sigma0 };
    let t = tau.value();
    let sigma_tau = (1.0 - t) * s0 + t * sigma1;
    let exp0 = s0 * s0 / (2.0 * sigma_tau * sigma_tau);
    let exp1 = sigma1 * sigma1 / (2.0 * sigma_tau * sigma_tau);

    let half = (size / 2) as i64;
    let mut log_values = Vec::with_capacity(size * size);
    let mut max_log = f64::NEG_INFINITY;
    for dy in -half..=half {
        for dx in -half..=half {
            let r2 = (dy * dy + dx * dx) as f64;
            // log of the unnormalized primaries; constants drop out under the
            // final normalization
            let log_b0 = -r2 / (2.0 * s0 * s0);
            let log_b1 = -r2 / (2.0 * sigma1 * sigma1);
            let lv = exp0 * log_b0 + exp1 * log_b1;
            max_log = max_log.max(lv);
            log_values.push(lv);
        }
    }
    let mut values: Vec<f64> = log_values.iter().map(|lv| (lv - max_log).exp()).collect();
    normalize(&mut values);
    Ok(Kernel { size, values, family: KernelFamily::IsotropicGaussian { sigma: sigma_tau } })
}
