//! Full-reference fidelity metrics: PSNR and SSIM.

use super::Image;
use crate::error::{invalid, shape_mismatch, Result};

/// PSNR sentinel for (near-)identical inputs.
pub const PSNR_CAP_DB: f64 = 100.0;

const MSE_FLOOR: f64 = 1e-10;

/// Peak signal-to-noise ratio in dB with peak 1.0. `border` pixels are
/// cropped from every side before comparison (SR protocol: border = scale).
pub fn psnr(a: &Image, b: &Image, border: usize) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(shape_mismatch(format!(
            "psnr: {}x{}x{} vs {}x{}x{}",
            a.height, a.width, a.channels, b.height, b.width, b.channels
        )));
    }
    if a.height <= 2 * border || a.width <= 2 * border {
        return Err(invalid(format!(
            "psnr: border {border} leaves no pixels in {}x{}",
            a.height, a.width
        )));
    }
    // summing in sorted order makes the reduction independent of pixel
    // order, so PSNR is exactly invariant under dihedral transforms
    let mut sq = Vec::with_capacity((a.height - 2 * border) * (a.width - 2 * border) * a.channels);
    for r in border..a.height - border {
        for c in border..a.width - border {
            for ch in 0..a.channels {
                let d = a.get(r, c, ch) - b.get(r, c, ch);
                sq.push(d * d);
            }
        }
    }
    sq.sort_unstable_by(f64::total_cmp);
    let count = sq.len();
    let mse = sq.iter().sum::<f64>() / count as f64;
    if mse < MSE_FLOOR {
        Ok(PSNR_CAP_DB)
    } else {
        Ok(10.0 * (1.0 / mse).log10())
    }
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn ssim_window_1d() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Valid-mode separable filtering with an 11-tap window.
fn filter_valid(img: &[f64], h: usize, w: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let oh = h - SSIM_WINDOW + 1;
    let ow = w - SSIM_WINDOW + 1;
    // horizontal
    let mut tmp = vec![0.0; h * ow];
    for r in 0..h {
        for c in 0..ow {
            let mut acc = 0.0;
            for (t, &wt) in win.iter().enumerate() {
                acc += wt * img[r * w + c + t];
            }
            tmp[r * ow + c] = acc;
        }
    }
    // vertical
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            let mut acc = 0.0;
            for (t, &wt) in win.iter().enumerate() {
                acc += wt * tmp[(r + t) * ow + c];
            }
            out[r * ow + c] = acc;
        }
    }
    out
}

/// Mean local SSIM (Wang et al.): 11×11 Gaussian window σ=1.5, K1=0.01,
/// K2=0.03, dynamic range 1. Inputs must be single-channel and at least as
/// large as the window.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(shape_mismatch("ssim: image shapes differ".to_string()));
    }
    if a.channels != 1 {
        return Err(invalid(format!("ssim expects single channel, got {}", a.channels)));
    }
    if a.height < SSIM_WINDOW || a.width < SSIM_WINDOW {
        return Err(invalid(format!(
            "ssim: image {}x{} smaller than {}x{} window",
            a.height, a.width, SSIM_WINDOW, SSIM_WINDOW
        )));
    }
    let win = ssim_window_1d();
    let (h, w) = (a.height, a.width);
    let aa: Vec<f64> = a.data.iter().map(|x| x * x).collect();
    let bb: Vec<f64> = b.data.iter().map(|x| x * x).collect();
    let ab: Vec<f64> = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();

    let mu_a = filter_valid(&a.data, h, w, &win);
    let mu_b = filter_valid(&b.data, h, w, &win);
    let m_aa = filter_valid(&aa, h, w, &win);
    let m_bb = filter_valid(&bb, h, w, &win);
    let m_ab = filter_valid(&ab, h, w, &win);

    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = m_aa[i] - ma * ma;
        let vb = m_bb[i] - mb * mb;
        let cov = m_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
            / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(total / mu_a.len() as f64)
}
