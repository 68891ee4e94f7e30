//! Conversions between the imaging [`Image`] (HWC, f64) and nn [`Tensor`]
//! (NCHW, f32/f64) representations.

use crate::error::{shape_mismatch, Result};
use crate::imaging::Image;
use crate::nn::{Scalar, Tensor};

/// HWC image → (1, C, H, W) tensor.
pub fn image_to_tensor<S: Scalar>(img: &Image) -> Tensor<S> {
    let (h, w, c) = (img.height, img.width, img.channels);
    let mut data = vec![S::ZERO; c * h * w];
    for r in 0..h {
        for cc in 0..w {
            for ch in 0..c {
                data[ch * h * w + r * w + cc] = S::from_f64(img.get(r, cc, ch));
            }
        }
    }
    Tensor::from_vec(&[1, c, h, w], data).unwrap()
}

/// Stack equally shaped images into a (B, C, H, W) batch.
pub fn images_to_batch<S: Scalar>(imgs: &[&Image]) -> Result<Tensor<S>> {
    let first = imgs
        .first()
        .ok_or_else(|| shape_mismatch("cannot batch zero images".to_string()))?;
    let (h, w, c) = (first.height, first.width, first.channels);
    let plane = c * h * w;
    let mut data = vec![S::ZERO; imgs.len() * plane];
    for (b, img) in imgs.iter().enumerate() {
        if img.height != h || img.width != w || img.channels != c {
            return Err(shape_mismatch("batched images differ in shape".to_string()));
        }
        for r in 0..h {
            for cc in 0..w {
                for ch in 0..c {
                    data[b * plane + ch * h * w + r * w + cc] = S::from_f64(img.get(r, cc, ch));
                }
            }
        }
    }
    Tensor::from_vec(&[imgs.len(), c, h, w], data)
}

/// Extract sample `b` of a (B, C, H, W) tensor as an HWC image.
pub fn tensor_to_image<S: Scalar>(t: &Tensor<S>, b: usize) -> Result<Image> {
    let s = t.shape();
    if s.len() != 4 || b >= s[0] {
        return Err(shape_mismatch(format!("tensor_to_image: shape {s:?}, sample {b}")));
    }
    let (c, h, w) = (s[1], s[2], s[3]);
    let mut img = Image::zeros(h, w, c);
    let plane = c * h * w;
    for ch in 0..c {
        for r in 0..h {
            for cc in 0..w {
                img.set(r, cc, ch, t.data()[b * plane + ch * h * w + r * w + cc].to_f64());
            }
        }
    }
    Ok(img)
}
