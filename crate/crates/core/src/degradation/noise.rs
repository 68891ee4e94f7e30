//! Additive white Gaussian noise fields.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::rng::sample_standard_normal;

/// Zero-mean Gaussian noise, per-channel independent, standard deviation
/// `level / 255` in the [0, 1] image range.
#[derive(Debug, Clone)]
pub struct NoiseField {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// HWC row-major, same layout as `Image`.
    pub values: Vec<f64>,
    /// Standard deviation in 8-bit intensity units.
    pub level: f64,
}

/// Draw an i.i.d. Gaussian field. `level = 0` returns all zeros without
/// consuming randomness.
pub fn synthesize_noise<R: Rng>(
    height: usize,
    width: usize,
    channels: usize,
    level: f64,
    rng: &mut R,
) -> Result<NoiseField> {
    if level < 0.0 {
        return Err(invalid(format!("noise level must be nonnegative, got {level}")));
    }
    let n = height * width * channels;
    let values = if level == 0.0 {
        vec![0.0; n]
    } else {
        let sd = level / 255.0;
        (0..n).map(|_| sd * sample_standard_normal(rng)).collect()
    };
    Ok(NoiseField { height, width, channels, values, level })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    #[test]
    fn zero_level_is_all_zeros() {
        let f = synthesize_noise(8, 8, 3, 0.0, &mut SeedTree::new(1).rng("n")).unwrap();
        assert!(f.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn negative_level_errors() {
        assert!(synthesize_noise(4, 4, 1, -1.0, &mut SeedTree::new(1).rng("n")).is_err());
    }

    #[test]
    fn sample_std_concentrates_at_level() {
        let f = synthesize_noise(256, 256, 1, 30.0, &mut SeedTree::new(2).rng("n")).unwrap();
        let n = f.values.len() as f64;
        let mean = f.values.iter().sum::<f64>() / n;
        let std = (f.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        let std_8bit = std * 255.0;
        assert!((29.0..=31.0).contains(&std_8bit), "sample std {std_8bit}");
        // sample mean within 4·level/√(HW) of 0 (in 8-bit units)
        let bound = 4.0 * 30.0 / (256.0 * 256.0f64).sqrt();
        assert!((mean * 255.0).abs() < bound, "mean {}", mean * 255.0);
    }

    #[test]
    fn same_seed_reproduces_field() {
        let a = synthesize_noise(16, 16, 3, 12.5, &mut SeedTree::new(3).rng("n")).unwrap();
        let b = synthesize_noise(16, 16, 3, 12.5, &mut SeedTree::new(3).rng("n")).unwrap();
        assert_eq!(a.values, b.values);
    }
}
