//! Bessel functions of the first kind for integer order.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::quadrature::adaptive_simpson_complex;

/// J_n(z) from the integral representation
/// `J_n(z) = (i^{−n}/π) ∫₀^π e^{iz cos θ} cos(nθ) dθ`.
pub fn bessel_j(n: u32, z: f64) -> f64 {
    let integral = adaptive_simpson_complex(
        |theta| Complex64::from_polar(1.0, z * theta.cos()) * (n as f64 * theta).cos(),
        0.0,
        PI,
        1e-14,
    );
    let i_pow = Complex64::i().powu(n).inv();
    (i_pow * integral / PI).re
}

/// J_n(z) from the ascending series Σ_k (−1)^k (z/2)^{2k+n} / (k!(k+n)!).
/// Accurate to about 1e-13 for |z| < 10.
pub fn bessel_j_series(n: u32, z: f64) -> f64 {
    let half = 0.5 * z;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let q = -half * half;
    for k in 1..200u32 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}
