//! Central finite differences, used to validate backward rules.
//!
//! Only forward evaluations are involved, so these checks stay independent
//! of the gradient code they verify.

use crate::matrix::Matrix;

/// Central-difference gradient of the scalar `f` at `x`.
pub fn numeric_gradient(mut f: impl FnMut(&Matrix) -> f64, x: &Matrix, eps: f64) -> Matrix {
    let mut probe = x.clone();
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    for k in 0..x.len() {
        let orig = probe.as_slice()[k];
        probe.as_mut_slice()[k] = orig + eps;
        let plus = f(&probe);
        probe.as_mut_slice()[k] = orig - eps;
        let minus = f(&probe);
        probe.as_mut_slice()[k] = orig;
        grad.as_mut_slice()[k] = (plus - minus) / (2.0 * eps);
    }
    grad
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, 1e-8)`.
pub fn relative_error(a: &Matrix, b: &Matrix) -> f64 {
    let diff = a
        .zip_map(b, "relative_error", |x, y| x - y)
        .expect("gradient shapes agree")
        .frobenius_norm();
    diff / a.frobenius_norm().max(b.frobenius_norm()).max(1e-8)
}
