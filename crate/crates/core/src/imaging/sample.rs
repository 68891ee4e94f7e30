//! Patch sampling, dihedral augmentation, and dataset mean handling.

use rand::Rng;

use super::{Image, PatchBox};
use crate::error::{invalid, shape_mismatch, Error, Result};

/// Draw `count` axis-aligned square crops of side `box_size`, positions
/// uniform over all valid boxes. Deterministic under a seeded rng.
pub fn random_crops<R: Rng>(
    img: &Image,
    count: usize,
    box_size: usize,
    rng: &mut R,
) -> Result<Vec<(Image, PatchBox)>> {
    if img.height < box_size || img.width < box_size {
        return Err(invalid(format!(
            "image {}x{} smaller than crop box {box_size}",
            img.height, img.width
        )));
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let top = rng.gen_range(0..=img.height - box_size);
        let left = rng.gen_range(0..=img.width - box_size);
        let boxx = PatchBox { top, left, height: box_size, width: box_size };
        out.push((img.crop(&boxx)?, boxx));
    }
    Ok(out)
}

/// Apply the `k`-th element of the dihedral group (k in 0..8):
/// bit 2 transposes, bit 1 flips rows, bit 0 flips columns.
pub fn dihedral(img: &Image, k: u8) -> Image {
    assert!(k < 8, "dihedral index {k} out of range");
    let transpose = k & 4 != 0;
    let flip_rows = k & 2 != 0;
    let flip_cols = k & 1 != 0;
    let (oh, ow) = if transpose { (img.width, img.height) } else { (img.height, img.width) };
    let mut out = Image::zeros(oh, ow, img.channels);
    out.color_space = img.color_space;
    for r in 0..oh {
        for c in 0..ow {
            let (mut sr, mut sc) = if transpose { (c, r) } else { (r, c) };
            if flip_rows {
                sr = img.height - 1 - sr;
            }
            if flip_cols {
                sc = img.width - 1 - sc;
            }
            for ch in 0..img.channels {
                out.set(r, c, ch, img.get(sr, sc, ch));
            }
        }
    }
    out
}

/// Pick one of the 8 dihedral transforms and apply it to an aligned LR/HR
/// pair. HR dimensions must be an integer multiple of LR's.
pub fn augment<R: Rng>(lr: &Image, hr: &Image, rng: &mut R) -> Result<(Image, Image)> {
    if lr.height == 0 || lr.width == 0 || hr.height % lr.height != 0 || hr.width % lr.width != 0 {
        return Err(shape_mismatch(format!(
            "augment: HR {}x{} is not an integer multiple of LR {}x{}",
            hr.height, hr.width, lr.height, lr.width
        )));
    }
    if hr.height / lr.height != hr.width / lr.width {
        return Err(shape_mismatch("augment: anisotropic LR/HR scale".to_string()));
    }
    let k = rng.gen_range(0..8u8);
    Ok((dihedral(lr, k), dihedral(hr, k)))
}

/// Per-channel mean over every pixel of every image in the set.
pub fn mean_rgb(dataset: &[Image]) -> Result<[f64; 3]> {
    if dataset.is_empty() {
        return Err(Error::Data("mean_rgb: empty dataset".to_string()));
    }
    let mut acc = [0.0f64; 3];
    let mut count = 0usize;
    for img in dataset {
        if img.channels != 3 {
            return Err(invalid("mean_rgb expects RGB images".to_string()));
        }
        for px in img.data.chunks(3) {
            acc[0] += px[0];
            acc[1] += px[1];
            acc[2] += px[2];
        }
        count += img.height * img.width;
    }
    Ok([acc[0] / count as f64, acc[1] / count as f64, acc[2] / count as f64])
}

pub fn subtract_mean(img: &Image, mean: &[f64; 3]) -> Result<Image> {
    shift_mean(img, mean, -1.0)
}

pub fn add_mean(img: &Image, mean: &[f64; 3]) -> Result<Image> {
    shift_mean(img, mean, 1.0)
}

fn shift_mean(img: &Image, mean: &[f64; 3], sign: f64) -> Result<Image> {
    if img.channels != 3 {
        return Err(invalid("mean shift expects RGB images".to_string()));
    }
    let mut out = img.clone();
    for px in out.data.chunks_mut(3) {
        for ch in 0..3 {
            px[ch] += sign * mean[ch];
        }
    }
    Ok(out)
}
