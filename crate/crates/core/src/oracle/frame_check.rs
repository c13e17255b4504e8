use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::state::annihilation;
use crate::cavity::check_grid;
use crate::error::{ReadoutError, Result};
use crate::modulation::Modulation;
use crate::ode::integrate_rk4;
use crate::params::SystemParams;
use crate::pulse_design::euler_lagrange_residual;
use crate::quadrature::adaptive_simpson;

/// Largest Euler–Lagrange residual accepted as a matched (g_c, g_z) pair.
const EL_TOLERANCE: f64 = 1e-6;

/// Overlap between direct lab-frame evolution and the frame-elimination
/// ansatz, per qubit branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameCheck {
    pub times: Vec<f64>,
    pub fidelity_e: Vec<f64>,
    pub fidelity_g: Vec<f64>,
}

impl FrameCheck {
    /// Pointwise minimum over the two branches.
    pub fn fidelity(&self) -> Vec<f64> {
        self.fidelity_e.iter().zip(&self.fidelity_g).map(|(a, b)| a.min(*b)).collect()
    }

    pub fn worst(&self) -> f64 {
        self.fidelity().into_iter().fold(1.0, f64::min)
    }
}

/// Schrödinger evolution of |ℓ⟩⊗|0⟩ under the lab-frame Hamiltonian with
/// coupling `gz`, compared against
///
/// ```text
/// V(t) e^{−iE t}|0⟩,  V = e^{iθ} e^{−iġ_c σ^z(a†+a)/ω_r²} e^{−g_c σ^z(a†−a)/ω_r}
/// ```
///
/// with θ = −∫(ġ_c²/ω_r³ − g_c²/ω_r + 2g_c g_z/ω_r) and E = ω_r/2.
/// The cavity is undamped. Returns |⟨ψ_ansatz|ψ_direct⟩|² on `grid`.
pub fn frame_elimination_check(
    p: &SystemParams,
    gc: &Modulation,
    gz: &Modulation,
    grid: &[f64],
    fock_truncation: usize,
) -> Result<FrameCheck> {
    check_grid(grid)?;
    gz.check_time(*grid.last().unwrap())?;
    let w = p.omega_r;
    let el = euler_lagrange_residual(gc, gz, w, 1000);
    if !(el < EL_TOLERANCE) {
        return Err(ReadoutError::Precondition(format!(
            "(g_c, g_z) Euler-Lagrange residual {el:e} exceeds {EL_TOLERANCE:e}"
        )));
    }
    let d = fock_truncation + 1;
    let sq: Vec<f64> = (0..d).map(|n| (n as f64).sqrt()).collect();
    let a = annihilation(d);
    let x = &a + a.adjoint();
    let y = a.adjoint() - &a;
    let dt = (2.0 * PI / (1000.0 * w)).min(gz.t_f() / 20000.0);

    let mut vac = DVector::zeros(d);
    vac[0] = Complex64::new(1.0, 0.0);

    let lagrangian = |t: f64| {
        let c = gc.eval(t);
        c.first * c.first / w.powi(3) - c.value * c.value / w + 2.0 * c.value * gz.value(t) / w
    };
    let mut theta = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    let scale = gc.amplitude_scale().max(gz.amplitude_scale()).max(f64::MIN_POSITIVE);
    for &t in grid {
        acc -= adaptive_simpson(lagrangian, prev, t, 1e-12 * scale * scale / w * (t - prev).max(0.0));
        theta.push(acc);
        prev = t;
    }

    let mut fid = [Vec::new(), Vec::new()];
    for (b, s) in [1.0f64, -1.0].into_iter().enumerate() {
        // interaction picture of ω_r a†a: c̃ = s·g_z e^{iω_r t}
        let rhs = |t: f64, psi: &DVector<Complex64>| {
            let c = Complex64::from_polar(s * gz.value(t), w * t);
            let mi = Complex64::new(0.0, -1.0);
            DVector::from_fn(d, |m, _| {
                let mut v = Complex64::new(0.0, 0.0);
                if m > 0 {
                    v += c * sq[m] * psi[m - 1];
                }
                if m + 1 < d {
                    v += c.conj() * sq[m + 1] * psi[m + 1];
                }
                mi * v
            })
        };
        let states = integrate_rk4(rhs, vac.clone(), 0.0, grid, dt, |_, _| Ok(()))?;
        for ((&t, psi_i), th) in grid.iter().zip(states).zip(&theta) {
            let rot = DVector::from_fn(d, |n, _| Complex64::from_polar(1.0, -w * t * n as f64));
            let direct = psi_i.component_mul(&rot);
            let c = gc.eval(t);
            let d1: DMatrix<Complex64> = &y * Complex64::new(-s * c.value / w, 0.0);
            let d2: DMatrix<Complex64> = &x * Complex64::new(0.0, -s * c.first / (w * w));
            let phase = Complex64::from_polar(1.0, th - 0.5 * w * t);
            let ansatz = (d2.exp() * (d1.exp() * &vac)) * phase;
            fid[b].push(ansatz.dotc(&direct).norm_sqr());
        }
    }
    let [fidelity_e, fidelity_g] = fid;
    Ok(FrameCheck {
        times: grid.to_vec(),
        fidelity_e,
        fidelity_g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::linspace;
    use crate::pulse_design::{gz_from_gc, polynomial_ansatz};

    #[test]
    fn zero_coupling_is_exact() {
        let p = SystemParams::standard();
        let zero = Modulation::constant(0.0, p.t_f).unwrap();
        let out = frame_elimination_check(&p, &zero, &zero, &linspace(0.0, p.t_f, 5), 5).unwrap();
        assert!(out.fidelity().iter().all(|&f| (f - 1.0).abs() < 1e-14));
    }

    #[test]
    fn mismatched_pair_rejected() {
        let p = SystemParams::standard();
        let gc = polynomial_ansatz(&p);
        let r = frame_elimination_check(&p, &gc, &gc, &[0.0, p.t_f], 5);
        assert!(matches!(r, Err(ReadoutError::Precondition(_))));
    }

    #[test]
    fn slow_pair_in_small_units() {
        // ω_r t_f = 200, smooth pulse
        let p = SystemParams::new(1.0, 100.0, 1.0, 1.0, 2.0).unwrap();
        let gc = polynomial_ansatz(&p).scaled(1e-2);
        let gz = gz_from_gc(&gc, p.omega_r).unwrap();
        let out = frame_elimination_check(&p, &gc, &gz, &linspace(0.0, p.t_f, 9), 12).unwrap();
        assert!(out.worst() > 1.0 - 1e-9, "{}", out.worst());
    }
}
