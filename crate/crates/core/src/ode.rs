//! Explicit Runge–Kutta integrators over a generic linear state space.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{ReadoutError, Result};

/// Vector-space operations needed by the integrators.
pub trait OdeState: Clone {
    /// `self += a·x`
    fn axpy(&mut self, a: f64, x: &Self);
    /// Largest component magnitude.
    fn max_abs(&self) -> f64;
    fn zeros_like(&self) -> Self;
}

impl OdeState for Vec<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            *s += a * v;
        }
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
    fn zeros_like(&self) -> Self {
        vec![0.0; self.len()]
    }
}

impl OdeState for DVector<Complex64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x.iter()) {
            *s += v * a;
        }
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
    fn zeros_like(&self) -> Self {
        DVector::zeros(self.len())
    }
}

impl OdeState for DMatrix<Complex64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x.iter()) {
            *s += v * a;
        }
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
    fn zeros_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
}

/// One classical fourth-order step.
pub fn rk4_step<Y: OdeState, F: Fn(f64, &Y) -> Y>(f: &F, t: f64, y: &Y, h: f64) -> Y {
    let k1 = f(t, y);
    let mut tmp = y.clone();
    tmp.axpy(0.5 * h, &k1);
    let k2 = f(t + 0.5 * h, &tmp);
    let mut tmp = y.clone();
    tmp.axpy(0.5 * h, &k2);
    let k3 = f(t + 0.5 * h, &tmp);
    let mut tmp = y.clone();
    tmp.axpy(h, &k3);
    let k4 = f(t + h, &tmp);
    let mut out = y.clone();
    out.axpy(h / 6.0, &k1);
    out.axpy(h / 3.0, &k2);
    out.axpy(h / 3.0, &k3);
    out.axpy(h / 6.0, &k4);
    out
}

fn check_output_grid(t0: f64, grid: &[f64]) -> Result<()> {
    if grid.first().is_some_and(|&t| t < t0) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(ReadoutError::Input(
            "output grid must be nondecreasing and start at or after t0".into(),
        ));
    }
    Ok(())
}

/// Fixed-step RK4 from `t0`, recording the state at every grid time. Each
/// interval between outputs is split into equal steps no longer than `dt`.
/// `observe` runs after each recorded state and may abort the run.
pub fn integrate_rk4<Y, F, O>(f: F, y0: Y, t0: f64, grid: &[f64], dt: f64, mut observe: O) -> Result<Vec<Y>>
where
    Y: OdeState,
    F: Fn(f64, &Y) -> Y,
    O: FnMut(f64, &Y) -> Result<()>,
{
    if !(dt > 0.0) {
        return Err(ReadoutError::Input(format!("step size {dt:e} must be positive")));
    }
    check_output_grid(t0, grid)?;
    let mut out = Vec::with_capacity(grid.len());
    let mut y = y0;
    let mut t = t0;
    for &target in grid {
        let span = target - t;
        if span > 0.0 {
            let n = (span / dt).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for i in 0..n {
                y = rk4_step(&f, t + i as f64 * h, &y, h);
            }
            t = target;
        }
        observe(t, &y)?;
        out.push(y.clone());
    }
    Ok(out)
}

/// Tolerances and step limits for [`integrate_rk45`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand–Prince integration landing exactly on every grid time.
pub fn integrate_rk45<Y, F, O>(
    f: F,
    y0: Y,
    t0: f64,
    grid: &[f64],
    opts: AdaptiveOptions,
    mut observe: O,
) -> Result<Vec<Y>>
where
    Y: OdeState,
    F: Fn(f64, &Y) -> Y,
    O: FnMut(f64, &Y) -> Result<()>,
{
    if !(opts.rtol > 0.0 && opts.atol >= 0.0 && opts.h_init > 0.0 && opts.h_max > 0.0) {
        return Err(ReadoutError::Input("invalid adaptive integrator options".into()));
    }
    check_output_grid(t0, grid)?;
    let mut out = Vec::with_capacity(grid.len());
    let mut y = y0;
    let mut t = t0;
    let mut h = opts.h_init.min(opts.h_max);
    let mut steps = 0usize;
    for &target in grid {
        while t < target {
            steps += 1;
            if steps > opts.max_steps {
                return Err(ReadoutError::Resolution(format!(
                    "adaptive integrator exceeded {} steps at t = {t:e}",
                    opts.max_steps
                )));
            }
            let last = h >= target - t;
            let step = if last { target - t } else { h };
            let mut k: Vec<Y> = Vec::with_capacity(7);
            for s in 0..7 {
                let mut ys = y.clone();
                for (j, kj) in k.iter().enumerate() {
                    if A[s][j] != 0.0 {
                        ys.axpy(step * A[s][j], kj);
                    }
                }
                k.push(f(t + C[s] * step, &ys));
            }
            let mut y5 = y.clone();
            let mut err = y.zeros_like();
            for s in 0..7 {
                if B5[s] != 0.0 {
                    y5.axpy(step * B5[s], &k[s]);
                }
                err.axpy(step * (B5[s] - B4[s]), &k[s]);
            }
            let scale = opts.atol + opts.rtol * y.max_abs().max(y5.max_abs());
            let ratio = err.max_abs() / scale;
            if ratio <= 1.0 || step <= 1e-14 * target.abs().max(f64::MIN_POSITIVE) {
                t = if last { target } else { t + step };
                y = y5;
            }
            let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
            if !last || ratio > 1.0 {
                h = (step * factor).min(opts.h_max);
            }
        }
        observe(t, &y)?;
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn harmonic(_: f64, y: &Vec<f64>) -> Vec<f64> {
        vec![y[1], -y[0]]
    }

    #[test]
    fn rk4_harmonic_oscillator() {
        let grid: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let out = integrate_rk4(harmonic, vec![1.0, 0.0], 0.0, &grid, 1e-3, |_, _| Ok(())).unwrap();
        for (t, y) in grid.iter().zip(&out) {
            assert_relative_eq!(y[0], t.cos(), epsilon = 1e-10);
            assert_relative_eq!(y[1], -t.sin(), epsilon = 1e-10);
        }
    }

    #[test]
    fn rk4_order() {
        let err = |dt: f64| {
            let y = integrate_rk4(harmonic, vec![1.0, 0.0], 0.0, &[1.0], dt, |_, _| Ok(())).unwrap();
            (y[0][0] - 1f64.cos()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn rk45_matches_exact() {
        let opts = AdaptiveOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 1e-3,
            h_max: 1.0,
            max_steps: 100_000,
        };
        let grid = [0.0, 0.5, 3.0, 7.0];
        let out = integrate_rk45(harmonic, vec![1.0, 0.0], 0.0, &grid, opts, |_, _| Ok(())).unwrap();
        for (t, y) in grid.iter().zip(&out) {
            assert_relative_eq!(y[0], t.cos(), epsilon = 1e-8);
        }
    }

    #[test]
    fn rk45_step_budget() {
        let opts = AdaptiveOptions {
            rtol: 1e-12,
            atol: 0.0,
            h_init: 1e-3,
            h_max: 1.0,
            max_steps: 5,
        };
        let r = integrate_rk45(harmonic, vec![1.0, 0.0], 0.0, &[10.0], opts, |_, _| Ok(()));
        assert!(matches!(r, Err(ReadoutError::Resolution(_))));
    }

    #[test]
    fn complex_matrix_state() {
        let f = |_: f64, y: &DMatrix<Complex64>| y.map(|z| z * Complex64::new(0.0, -1.0));
        let y0 = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        let out = integrate_rk4(f, y0, 0.0, &[1.0], 1e-3, |_, _| Ok(())).unwrap();
        let expect = Complex64::from_polar(1.0, -1.0);
        assert!((out[0][(1, 0)] - expect).norm() < 1e-10);
    }

    #[test]
    fn observer_aborts() {
        let r = integrate_rk4(harmonic, vec![1.0, 0.0], 0.0, &[1.0, 2.0], 0.1, |t, _| {
            if t > 1.5 {
                Err(ReadoutError::Precondition("stop".into()))
            } else {
                Ok(())
            }
        });
        assert!(r.is_err());
        assert!(integrate_rk4(harmonic, vec![1.0], 0.0, &[1.0, 0.5], 0.1, |_, _| Ok(())).is_err());
    }
}
