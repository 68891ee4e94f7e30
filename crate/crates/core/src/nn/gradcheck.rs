//! Central-difference gradient checking, the oracle for every backward pass.

/// Numeric gradient of `f` at `x` via central differences.
pub fn central_diff_grad(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + eps;
        let plus = f(&probe);
        probe[i] = orig - eps;
        let minus = f(&probe);
        probe[i] = orig;
        grad[i] = (plus - minus) / (2.0 * eps);
    }
    grad
}

/// Max elementwise relative error between two gradients:
/// `|a − n| / max(1, |a|, |n|)`.
pub fn max_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Convenience wrapper: compare `analytic` against central differences of `f`
/// around `x0`, returning the max relative error.
pub fn grad_check(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    analytic: &[f64],
    eps: f64,
) -> f64 {
    let numeric = central_diff_grad(f, x0, eps);
    max_rel_error(analytic, &numeric)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_is_recovered() {
        // f(x) = sum x_i², grad = 2x
        let x = [0.3, -1.2, 2.0];
        let mut f = |p: &[f64]| p.iter().map(|v| v * v).sum();
        let analytic = [0.6, -2.4, 4.0];
        assert!(grad_check(&mut f, &x, &analytic, 1e-5) < 1e-9);
    }

    #[test]
    fn linearity_makes_central_difference_nearly_exact() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let coeffs = [0.25, -0.5, 1.5, 2.0];
        let mut f = |p: &[f64]| p.iter().zip(&coeffs).map(|(a, b)| a * b).sum();
        assert!(grad_check(&mut f, &x, &coeffs, 1e-3) < 1e-10);
    }
}
