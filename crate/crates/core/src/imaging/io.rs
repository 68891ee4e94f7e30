//! 8-bit PNG input/output. Quantization happens only here: internal pixels
//! stay floating point, values are clamped to [0, 1] and rounded at save.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use super::{ColorSpace, Image};
use crate::error::{Error, Result};

/// Read an 8-bit PNG as an [`Image`] in [0, 1]. Grayscale maps to a single
/// luminance channel; RGBA alpha is dropped.
pub fn read_png(path: &Path) -> Result<Image> {
    let file = File::open(path)?;
    let decoder = png::Decoder::new(file);
    let mut reader = decoder.read_info()?;
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf)?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Data(format!("{}: only 8-bit PNG supported", path.display())));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let src_channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::GrayscaleAlpha => 2,
        other => {
            return Err(Error::Data(format!("{}: unsupported color type {other:?}", path.display())))
        }
    };
    let keep = if src_channels >= 3 { 3 } else { 1 };
    let mut data = Vec::with_capacity(h * w * keep);
    for px in buf[..h * w * src_channels].chunks(src_channels) {
        for ch in 0..keep {
            data.push(f64::from(px[ch]) / 255.0);
        }
    }
    let mut img = Image::new(h, w, keep, data)?;
    img.color_space = if keep == 1 { ColorSpace::Luminance } else { ColorSpace::Rgb };
    Ok(img)
}

/// Write an [`Image`] as 8-bit PNG (RGB for 3 channels, grayscale for 1).
pub fn write_png(img: &Image, path: &Path) -> Result<()> {
    let color_type = match img.channels {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        c => return Err(Error::InvalidArg(format!("cannot encode {c}-channel image as PNG"))),
    };
    let file = File::create(path)?;
    let writer = BufWriter::new(file);
    let mut encoder = png::Encoder::new(writer, img.width as u32, img.height as u32);
    encoder.set_color(color_type);
    encoder.set_depth(png::BitDepth::Eight);
    let mut png_writer = encoder.write_header()?;
    let bytes: Vec<u8> =
        img.data.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    png_writer.write_image_data(&bytes)?;
    Ok(())
}
