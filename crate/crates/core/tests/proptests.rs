//! Property tests for the degradation algebra and imaging invariants.

use proptest::prelude::*;

use tlsr_core::degradation::{
    additive_transition, gaussian_kernel, transition_kernel, DoT,
};
use tlsr_core::imaging::{dihedral, psnr, Image};
use tlsr_core::nn::{PixelShuffle, Tensor};
use tlsr_core::rng::SeedTree;

fn arb_image(h: usize, w: usize, c: usize) -> impl Strategy<Value = Image> {
    proptest::collection::vec(0.0f64..1.0, h * w * c)
        .prop_map(move |data| Image::new(h, w, c, data).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gaussian_kernels_are_normalized_and_symmetric(
        sigma in 0.05f64..5.0,
        half in 1usize..6,
    ) {
        let size = 2 * half + 1;
        let k = gaussian_kernel(sigma, size).unwrap();
        prop_assert!((k.sum() - 1.0).abs() < 1e-9);
        for v in &k.values {
            prop_assert!(*v >= 0.0);
        }
        let hh = half as i64;
        for dy in -hh..=hh {
            for dx in -hh..=hh {
                prop_assert!((k.at(dy, dx) - k.at(-dy, -dx)).abs() < 1e-15);
                prop_assert!((k.at(dy, dx) - k.at(dx, dy)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn transition_kernels_match_interpolated_sigma(
        s0 in 0.1f64..1.5,
        delta in 0.2f64..3.0,
        tau in 0.0f64..=1.0,
    ) {
        let s1 = s0 + delta;
        let t = transition_kernel(s0, s1, DoT::new(tau).unwrap(), 21).unwrap();
        let g = gaussian_kernel((1.0 - tau) * s0 + tau * s1, 21).unwrap();
        prop_assert!(t.max_abs_diff(&g) < 1e-6);
        prop_assert!((t.sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn additive_transition_is_bilinear_in_tau(
        x0 in arb_image(4, 5, 1),
        x1 in arb_image(4, 5, 1),
        tau in 0.0f64..=1.0,
    ) {
        let a = additive_transition(&x0, &x1, DoT::new(tau).unwrap()).unwrap();
        let b = additive_transition(&x0, &x1, DoT::new(1.0 - tau).unwrap()).unwrap();
        for i in 0..a.data.len() {
            prop_assert!((a.data[i] + b.data[i] - (x0.data[i] + x1.data[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn psnr_is_symmetric_and_dihedral_invariant(
        a in arb_image(8, 8, 1),
        b in arb_image(8, 8, 1),
        k in 0u8..8,
    ) {
        let p_ab = psnr(&a, &b, 0).unwrap();
        let p_ba = psnr(&b, &a, 0).unwrap();
        prop_assert_eq!(p_ab, p_ba);
        let p_t = psnr(&dihedral(&a, k), &dihedral(&b, k), 0).unwrap();
        prop_assert_eq!(p_ab, p_t);
    }

    #[test]
    fn pixel_shuffle_round_trips_exactly(
        seed in 0u64..1000,
        s in 1usize..4,
    ) {
        let mut rng = SeedTree::new(seed).rng("ps");
        let x = Tensor::<f64>::randn(&[1, 2 * s * s, 3, 3], 1.0, &mut rng);
        let mut shuffle = PixelShuffle::new(s);
        let y = shuffle.forward(&x).unwrap();
        prop_assert_eq!(y.shape(), &[1usize, 2, 3 * s, 3 * s][..]);
        let back = shuffle.backward(&y).unwrap();
        prop_assert_eq!(back.data(), x.data());
    }
}
