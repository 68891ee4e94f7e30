//! Image representation, resampling, color conversion, sampling and the
//! full-reference quality metrics used for evaluation.
//!
//! Images are floating-point H×W×C rasters nominally in `[0, 1]`. Values are
//! only clamped when exported to 8-bit PNG; intermediate pipeline values may
//! leave the nominal range.

mod color;
mod io;
mod metrics;
mod resize;
mod sample;

pub use color::rgb_to_luminance;
pub use io::{read_png, write_png};
pub use metrics::{psnr, ssim, PSNR_CAP_DB};
pub use resize::bicubic_resize;
pub use sample::{add_mean, augment, dihedral, mean_rgb, random_crops, subtract_mean};

use crate::error::{shape_mismatch, Error, Result};

/// Color interpretation of an [`Image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorSpace {
    Rgb,
    Luminance,
}

/// H×W×C floating-point raster, row-major, channel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub color_space: ColorSpace,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(shape_mismatch(format!(
                "image data length {} does not match {}x{}x{}",
                data.len(),
                height,
                width,
                channels
            )));
        }
        let color_space = if channels == 1 { ColorSpace::Luminance } else { ColorSpace::Rgb };
        Ok(Self { height, width, channels, color_space, data })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self::new(height, width, channels, vec![0.0; height * width * channels]).unwrap()
    }

    pub fn constant(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Self::new(height, width, channels, vec![value; height * width * channels]).unwrap()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, value: f64) {
        self.data[(row * self.width + col) * self.channels + ch] = value;
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    /// Extract the rectangle described by `boxx` (must lie inside bounds).
    pub fn crop(&self, boxx: &PatchBox) -> Result<Image> {
        if boxx.top + boxx.height > self.height || boxx.left + boxx.width > self.width {
            return Err(Error::InvalidArg(format!(
                "crop box {}x{}+{}+{} exceeds image {}x{}",
                boxx.width, boxx.height, boxx.left, boxx.top, self.width, self.height
            )));
        }
        let mut out = Image::zeros(boxx.height, boxx.width, self.channels);
        out.color_space = self.color_space;
        for r in 0..boxx.height {
            let src = ((boxx.top + r) * self.width + boxx.left) * self.channels;
            let dst = r * boxx.width * self.channels;
            let n = boxx.width * self.channels;
            out.data[dst..dst + n].copy_from_slice(&self.data[src..src + n]);
        }
        Ok(out)
    }

    /// Crop to the largest top-left rectangle with both dimensions divisible
    /// by `modulus`.
    pub fn crop_to_multiple(&self, modulus: usize) -> Result<Image> {
        let h = (self.height / modulus) * modulus;
        let w = (self.width / modulus) * modulus;
        if h == 0 || w == 0 {
            return Err(Error::Data(format!(
                "image {}x{} too small for scale {}",
                self.height, self.width, modulus
            )));
        }
        self.crop(&PatchBox { top: 0, left: 0, height: h, width: w })
    }

    /// Elementwise a + s*b, shapes must match.
    pub fn axpy(&self, s: f64, b: &Image) -> Result<Image> {
        if !self.same_shape(b) {
            return Err(shape_mismatch("axpy operands differ in shape".to_string()));
        }
        let data = self.data.iter().zip(&b.data).map(|(x, y)| x + s * y).collect();
        let mut out = Image::new(self.height, self.width, self.channels, data)?;
        out.color_space = self.color_space;
        Ok(out)
    }

    pub fn clamp01(&self) -> Image {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = v.clamp(0.0, 1.0);
        }
        out
    }
}

/// Axis-aligned crop rectangle, `top`/`left` 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchBox {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crop_out_of_bounds_errors() {
        let img = Image::zeros(4, 4, 1);
        let bad = PatchBox { top: 2, left: 2, height: 3, width: 2 };
        assert!(img.crop(&bad).is_err());
    }

    #[test]
    fn crop_extracts_expected_pixels() {
        let mut img = Image::zeros(3, 3, 1);
        for r in 0..3 {
            for c in 0..3 {
                img.set(r, c, 0, (r * 3 + c) as f64);
            }
        }
        let sub = img.crop(&PatchBox { top: 1, left: 1, height: 2, width: 2 }).unwrap();
        assert_eq!(sub.data, vec![4.0, 5.0, 7.0, 8.0]);
    }
}
