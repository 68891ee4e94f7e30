//! The forward degradation pipeline: blur ⊗, bicubic ↓s, noise +.

use rand::Rng;

use super::{synthesize_noise, DegradationSpec, Kernel};
use crate::error::{invalid, Result};
use crate::imaging::{bicubic_resize, Image};

/// True 2-D convolution (kernel flipped) with mirror padding, so constant
/// images stay constant under any normalized kernel.
///
/// Isotropic Gaussians factor into two 1-D passes (the sampled pdf is an
/// outer product), which the training loops rely on for speed; other
/// families take the direct 2-D loop.
pub fn convolve(img: &Image, kernel: &Kernel) -> Result<Image> {
    if kernel.size > img.height || kernel.size > img.width {
        return Err(invalid(format!(
            "kernel {0}x{0} larger than image {1}x{2}",
            kernel.size, img.height, img.width
        )));
    }
    match kernel.family {
        crate::degradation::KernelFamily::Delta => {
            return Ok(img.clone());
        }
        crate::degradation::KernelFamily::IsotropicGaussian { sigma } => {
            return convolve_separable(img, sigma, kernel.size);
        }
        crate::degradation::KernelFamily::AnisotropicGaussian { .. } => {}
    }
    let half = (kernel.size / 2) as i64;
    let (h, w) = (img.height as i64, img.width as i64);
    let reflect = |q: i64, n: i64| -> usize {
        if q < 0 {
            (-q) as usize
        } else if q >= n {
            (2 * n - 2 - q) as usize
        } else {
            q as usize
        }
    };
    let mut out = Image::zeros(img.height, img.width, img.channels);
    out.color_space = img.color_space;
    for r in 0..h {
        for c in 0..w {
            for ch in 0..img.channels {
                let mut acc = 0.0;
                for a in -half..=half {
                    let sr = reflect(r - a, h);
                    for b in -half..=half {
                        let sc = reflect(c - b, w);
                        acc += kernel.at(a, b) * img.get(sr, sc, ch);
                    }
                }
                out.set(r as usize, c as usize, ch, acc);
            }
        }
    }
    Ok(out)
}

fn convolve_separable(img: &Image, sigma: f64, size: usize) -> Result<Image> {
    let half = (size / 2) as i64;
    let mut k1 = Vec::with_capacity(size);
    let mut sum = 0.0;
    for d in -half..=half {
        let v = (-(d * d) as f64 / (2.0 * sigma * sigma)).exp();
        k1.push(v);
        sum += v;
    }
    for v in &mut k1 {
        *v /= sum;
    }
    let reflect = |q: i64, n: i64| -> usize {
        if q < 0 {
            (-q) as usize
        } else if q >= n {
            (2 * n - 2 - q) as usize
        } else {
            q as usize
        }
    };
    let (h, w, c) = (img.height, img.width, img.channels);
    // vertical pass
    let mut mid = Image::zeros(h, w, c);
    for r in 0..h as i64 {
        for col in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (t, kv) in k1.iter().enumerate() {
                    let sr = reflect(r - (t as i64 - half), h as i64);
                    acc += kv * img.get(sr, col, ch);
                }
                mid.set(r as usize, col, ch, acc);
            }
        }
    }
    // horizontal pass
    let mut out = Image::zeros(h, w, c);
    out.color_space = img.color_space;
    for r in 0..h {
        for col in 0..w as i64 {
            for ch in 0..c {
                let mut acc = 0.0;
                for (t, kv) in k1.iter().enumerate() {
                    let sc = reflect(col - (t as i64 - half), w as i64);
                    acc += kv * mid.get(r, sc, ch);
                }
                out.set(r, col as usize, ch, acc);
            }
        }
    }
    Ok(out)
}

/// Apply a full degradation: `x = bicubic↓s(y ⊗ kernel) + noise`, with the
/// downsampling antialiased. HR dimensions must be divisible by the scale.
pub fn degrade<R: Rng>(y: &Image, spec: &DegradationSpec, rng: &mut R) -> Result<Image> {
    if spec.scale == 0 {
        return Err(invalid("scale must be >= 1".to_string()));
    }
    if y.height % spec.scale != 0 || y.width % spec.scale != 0 {
        return Err(invalid(format!(
            "image {}x{} not divisible by scale {}",
            y.height, y.width, spec.scale
        )));
    }
    let blurred = convolve(y, &spec.kernel)?;
    let down = if spec.scale == 1 {
        blurred
    } else {
        bicubic_resize(&blurred, 1.0 / spec.scale as f64, true)?
    };
    if spec.noise_level == 0.0 {
        return Ok(down);
    }
    let noise = synthesize_noise(down.height, down.width, down.channels, spec.noise_level, rng)?;
    let data = down.data.iter().zip(&noise.values).map(|(a, b)| a + b).collect();
    Image::new(down.height, down.width, down.channels, data)
}
