//! Procedural test images: oriented gratings with harmonics, Gaussian
//! blobs, dense hard-edged rectangles and thin lines, correlated across
//! channels. Benchmark sets are not bundled; these give CI and smoke runs
//! enough broadband structure to train and evaluate on.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::imaging::Image;
use crate::rng::SeedTree;

pub fn synth_image(height: usize, width: usize, rng: &mut ChaCha8Rng) -> Image {
    let mut img = Image::zeros(height, width, 3);
    let base = [
        rng.gen_range(0.35..0.65),
        rng.gen_range(0.35..0.65),
        rng.gen_range(0.35..0.65),
    ];
    // oriented gratings; the squared harmonic keeps edges crisp. The last
    // two sit near Nyquist so every patch carries blur-sensitive detail.
    let waves: Vec<(f64, f64, f64, f64, f64, [f64; 3])> = (0..6)
        .map(|i| {
            let angle: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let freq =
                if i < 4 { rng.gen_range(0.15..1.3) } else { rng.gen_range(1.2..2.4) };
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let amp =
                if i < 4 { rng.gen_range(0.04..0.14) } else { rng.gen_range(0.03..0.09) };
            let squareness = rng.gen_range(0.0..1.0);
            let gains = [rng.gen_range(0.5..1.0), rng.gen_range(0.5..1.0), rng.gen_range(0.5..1.0)];
            (angle, freq, phase, amp, squareness, gains)
        })
        .collect();
    // smooth blobs
    let blobs: Vec<(f64, f64, f64, [f64; 3])> = (0..4)
        .map(|_| {
            let cy = rng.gen_range(0.0..height as f64);
            let cx = rng.gen_range(0.0..width as f64);
            let radius = rng.gen_range(4.0..(height.min(width) as f64 / 2.5));
            let gains = [
                rng.gen_range(-0.22..0.22),
                rng.gen_range(-0.22..0.22),
                rng.gen_range(-0.22..0.22),
            ];
            (cy, cx, radius, gains)
        })
        .collect();
    // dense hard-edged rectangles, most of them small
    let rects: Vec<(usize, usize, usize, usize, [f64; 3])> = (0..14)
        .map(|i| {
            let top = rng.gen_range(0..height.saturating_sub(4).max(1));
            let left = rng.gen_range(0..width.saturating_sub(4).max(1));
            let max_side = if i < 4 { height / 3 + 4 } else { 6 };
            let h = rng.gen_range(2..max_side.max(3)).min(height - top);
            let w = rng.gen_range(2..max_side.max(3)).min(width - left);
            let gains = [
                rng.gen_range(-0.28..0.28),
                rng.gen_range(-0.28..0.28),
                rng.gen_range(-0.28..0.28),
            ];
            (top, left, h, w, gains)
        })
        .collect();
    // thin lines, horizontal or vertical
    let lines: Vec<(bool, usize, usize, usize, [f64; 3])> = (0..4)
        .map(|_| {
            let horizontal = rng.gen_bool(0.5);
            let pos = rng.gen_range(0..if horizontal { height } else { width });
            let start = rng.gen_range(0..if horizontal { width } else { height } / 2);
            let len = rng.gen_range(8..if horizontal { width } else { height });
            let gains = [
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
            ];
            (horizontal, pos, start, len, gains)
        })
        .collect();

    for r in 0..height {
        for c in 0..width {
            let mut px = base;
            for (angle, freq, phase, amp, squareness, gains) in &waves {
                let t = freq * (r as f64 * angle.sin() + c as f64 * angle.cos()) + phase;
                let s = t.sin();
                let v = amp * (s + squareness * s.signum() * s * s);
                for ch in 0..3 {
                    px[ch] += v * gains[ch];
                }
            }
            for (cy, cx, radius, gains) in &blobs {
                let d2 = ((r as f64 - cy).powi(2) + (c as f64 - cx).powi(2)) / (radius * radius);
                let v = (-d2).exp();
                for ch in 0..3 {
                    px[ch] += v * gains[ch];
                }
            }
            for (top, left, h, w, gains) in &rects {
                if r >= *top && r < top + h && c >= *left && c < left + w {
                    for ch in 0..3 {
                        px[ch] += gains[ch];
                    }
                }
            }
            for (horizontal, pos, start, len, gains) in &lines {
                let on = if *horizontal {
                    r == *pos && c >= *start && c < start + len
                } else {
                    c == *pos && r >= *start && r < start + len
                };
                if on {
                    for ch in 0..3 {
                        px[ch] += gains[ch];
                    }
                }
            }
            for ch in 0..3 {
                img.set(r, c, ch, px[ch].clamp(0.02, 0.98));
            }
        }
    }
    img
}

pub fn synth_dataset(count: usize, height: usize, width: usize, seed: u64) -> Vec<Image> {
    let tree = SeedTree::new(seed);
    (0..count).map(|i| synth_image(height, width, &mut tree.rng(&format!("synth{i}")))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn images_are_in_range_deterministic_and_non_constant() {
        let a = synth_dataset(2, 32, 40, 5);
        let b = synth_dataset(2, 32, 40, 5);
        assert_eq!(a[0].data, b[0].data);
        assert_ne!(a[0].data, a[1].data);
        for img in &a {
            assert!(img.data.iter().all(|v| (0.0..=1.0).contains(v)));
            let mean = img.data.iter().sum::<f64>() / img.data.len() as f64;
            let var =
                img.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / img.data.len() as f64;
            assert!(var > 1e-3, "synthetic image lacks structure (var {var})");
        }
    }

    #[test]
    fn blur_level_is_visible_in_gradient_energy() {
        // sanity for the DoT experiments: high-frequency content must react
        // to the blur range the convolutive family spans
        use crate::degradation::{degrade, DegradationSampler, DegradationFamily};
        let imgs = synth_dataset(3, 96, 96, 9);
        let sampler = DegradationSampler::new(DegradationFamily::Convolutive, (0.2, 2.0), 2, 13);
        let grad_energy = |img: &Image| -> f64 {
            let mut acc = 0.0;
            for r in 0..img.height {
                for c in 1..img.width {
                    acc += (img.get(r, c, 0) - img.get(r, c - 1, 0)).abs();
                }
            }
            acc / (img.height * img.width) as f64
        };
        let mut sharp_sum = 0.0;
        let mut blurred_sum = 0.0;
        for (i, img) in imgs.iter().enumerate() {
            let tree = SeedTree::new(31).child_idx(i as u64);
            let sharp = degrade(img, &sampler.spec_for(0.2).unwrap(), &mut tree.rng("a")).unwrap();
            let blurred = degrade(img, &sampler.spec_for(2.0).unwrap(), &mut tree.rng("b")).unwrap();
            sharp_sum += grad_energy(&sharp);
            blurred_sum += grad_energy(&blurred);
        }
        assert!(
            sharp_sum > 1.35 * blurred_sum,
            "blur endpoints barely separate: sharp {sharp_sum:.4} vs blurred {blurred_sum:.4}"
        );
    }
}
