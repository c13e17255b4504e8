//! Adaptive Simpson quadrature.

use num_complex::Complex64;

const MAX_DEPTH: u32 = 48;

/// ∫_a^b f with absolute tolerance `tol`, by recursive Simpson bisection with
/// Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    // a single Simpson panel can be fooled by integrands that happen to vanish
    // on its three nodes; start from two halves
    let f1 = f(0.5 * (a + m));
    let f3 = f(0.5 * (m + b));
    let left = (m - a) / 6.0 * (fa + 4.0 * f1 + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * f3 + fb);
    recurse(&f, a, m, fa, f1, fm, left, 0.5 * tol, MAX_DEPTH)
        + recurse(&f, m, b, fm, f3, fb, right, 0.5 * tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || m <= a || m >= b {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Complex-valued integrand, real and imaginary parts integrated separately.
pub fn adaptive_simpson_complex<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Complex64 {
    let re = adaptive_simpson(|x| f(x).re, a, b, tol);
    let im = adaptive_simpson(|x| f(x).im, a, b, tol);
    Complex64::new(re, im)
}

/// Composite trapezoid rule on tabulated values.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}
