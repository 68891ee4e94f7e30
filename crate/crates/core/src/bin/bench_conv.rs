use std::time::Instant;
use tlsr_core::nn::{Conv2d, Padding, Tensor};
use tlsr_core::rng::SeedTree;

fn main() {
    let tree = SeedTree::new(1);
    // typical trunk conv at toy scale, f32
    let x = Tensor::<f32>::randn(&[4, 16, 32, 32], 1.0, &mut tree.rng("x"));
    let mut conv = Conv2d::<f32>::new("c", 16, 16, 3, Padding::Zero, 1, true, &mut tree.rng("w"));
    let dy = Tensor::<f32>::randn(&[4, 16, 32, 32], 1.0, &mut tree.rng("dy"));
    // warmup
    for _ in 0..5 { let _ = conv.forward(&x).unwrap(); let _ = conv.backward(&dy).unwrap(); }
    let n = 200;
    let t0 = Instant::now();
    for _ in 0..n {
        let _ = conv.forward(&x).unwrap();
        let _ = conv.backward(&dy).unwrap();
    }
    let dt = t0.elapsed().as_secs_f64();
    let macs = 3.0 * 4.0 * 16.0 * 16.0 * 9.0 * 1024.0 * n as f64; // fwd + ~2x bwd
    println!("f32 conv 16x16 k3 b4 32x32 fwd+bwd: {:.3} ms/iter, ~{:.1} GFLOP/s", dt / n as f64 * 1e3, 2.0 * macs / dt / 1e9);

    let x64 = Tensor::<f64>::randn(&[4, 16, 32, 32], 1.0, &mut tree.rng("x"));
    let mut conv64 = Conv2d::<f64>::new("c", 16, 16, 3, Padding::Zero, 1, true, &mut tree.rng("w"));
    let dy64 = Tensor::<f64>::randn(&[4, 16, 32, 32], 1.0, &mut tree.rng("dy"));
    for _ in 0..5 { let _ = conv64.forward(&x64).unwrap(); let _ = conv64.backward(&dy64).unwrap(); }
    let t0 = Instant::now();
    for _ in 0..n {
        let _ = conv64.forward(&x64).unwrap();
        let _ = conv64.backward(&dy64).unwrap();
    }
    let dt = t0.elapsed().as_secs_f64();
    println!("f64 same: {:.3} ms/iter, ~{:.1} GFLOP/s", dt / n as f64 * 1e3, 2.0 * macs / dt / 1e9);
}
