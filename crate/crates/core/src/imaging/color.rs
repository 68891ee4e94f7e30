//! Color conversion. Metrics follow the SR benchmark convention of scoring
//! the BT.601 studio-swing luminance channel.

use super::{ColorSpace, Image};
use crate::error::{invalid, Result};

/// RGB ([0,1]) → studio-swing luminance: Y = (65.481 R + 128.553 G + 24.966 B + 16) / 255.
pub fn rgb_to_luminance(img: &Image) -> Result<Image> {
    if img.channels != 3 {
        return Err(invalid(format!("rgb_to_luminance expects 3 channels, got {}", img.channels)));
    }
    let mut out = Image::zeros(img.height, img.width, 1);
    out.color_space = ColorSpace::Luminance;
    for (i, px) in img.data.chunks(3).enumerate() {
        out.data[i] = (65.481 * px[0] + 128.553 * px[1] + 24.966 * px[2] + 16.0) / 255.0;
    }
    Ok(out)
}
