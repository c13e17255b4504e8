//! Inverse engineering of the auxiliary waveform g_c(t) and the physical
//! coupling g_z(t) it implies.
//!
//! The physical coupling follows from the auxiliary one through
//!
//! ```text
//! g_z(t) = g_c(t) + g̈_c(t) / ω_r²
//! ```
//!
//! and g_c must vanish together with its first two derivatives at both ends
//! of the protocol while delivering the displacement ∫₀^{t_f} g_c = g_z0·π/(2κ).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{ReadoutError, Result};
use crate::modulation::{Modulation, ModulationKind};
use crate::params::SystemParams;

/// Relative tolerance used by [`verify_boundaries`] when callers have no
/// better figure.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-6;

fn check_range(p: &SystemParams, t: f64) -> Result<()> {
    if !(0.0..=p.t_f).contains(&t) {
        return Err(ReadoutError::Domain(format!(
            "t = {t:e} outside [0, {:e}]",
            p.t_f
        )));
    }
    Ok(())
}

/// Degree-six polynomial ansatz, 70π·g_z0·t³(t_f − t)³ / (κ·t_f⁷).
pub fn eval_poly_gc(p: &SystemParams, t: f64) -> Result<f64> {
    check_range(p, t)?;
    let s = p.t_f - t;
    Ok(70.0 * PI * p.g_z0 * (t * s).powi(3) / (p.kappa * p.t_f.powi(7)))
}

/// Trigonometric ansatz, (3π²·g_z0 / (2κ·t_f))·sin(x)·cos⁵(x) with x = πt/(2t_f).
pub fn eval_trig_gc(p: &SystemParams, t: f64) -> Result<f64> {
    check_range(p, t)?;
    let (s, c) = (PI * t / (2.0 * p.t_f)).sin_cos();
    Ok(trig_prefactor(p) * s * c.powi(5))
}

fn trig_prefactor(p: &SystemParams) -> f64 {
    3.0 * p.g_z0 * PI * PI / (2.0 * p.kappa * p.t_f)
}

/// The polynomial ansatz as a [`Modulation`]: C·(u³ − 3u⁴ + 3u⁵ − u⁶) in
/// u = t/t_f, which equals [`eval_poly_gc`] identically.
pub fn polynomial_ansatz(p: &SystemParams) -> Modulation {
    let c = 70.0 * PI * p.g_z0 / (p.kappa * p.t_f);
    Modulation::polynomial(vec![0.0, 0.0, 0.0, c, -3.0 * c, 3.0 * c, -c], p.t_f)
        .expect("validated params give a valid polynomial")
}

/// The trigonometric ansatz as a sine series. With 2x = πt/t_f,
/// sin x·cos⁵ x = (5 sin 2x + 4 sin 4x + sin 6x)/32.
pub fn trigonometric_ansatz(p: &SystemParams) -> Modulation {
    let a = trig_prefactor(p) / 32.0;
    Modulation::trigonometric(vec![5.0 * a, 4.0 * a, a], p.t_f)
        .expect("validated params give a valid sine series")
}

/// Comparison baseline: a resonant sinusoidal drive reduced to its
/// rotating-frame envelope, the constant g_z0.
pub fn baseline_modulation(p: &SystemParams, t: f64) -> Result<f64> {
    check_range(p, t)?;
    Ok(p.g_z0)
}

pub fn baseline(p: &SystemParams) -> Modulation {
    Modulation::constant(p.g_z0, p.t_f).expect("validated params")
}

/// Physical coupling g_z = g_c + g̈_c/ω_r² for an auxiliary waveform g_c.
///
/// Closed forms map coefficient-wise; a `Sampled` input is transformed on its
/// own grid with finite-difference curvature and needs at least five samples.
/// Bang-bang and constant waveforms have no curvature away from the switches
/// and come back unchanged.
pub fn gz_from_gc(m: &Modulation, omega_r: f64) -> Result<Modulation> {
    if omega_r <= 0.0 {
        return Err(ReadoutError::Input("omega_r must be positive".into()));
    }
    let t_f = m.t_f();
    let w2 = omega_r * omega_r;
    let harmonic_factor = |h: f64| 1.0 - (h * PI / t_f).powi(2) / w2;
    let c = m.coefficients();
    match m.kind() {
        ModulationKind::Polynomial => {
            let scale = 1.0 / (w2 * t_f * t_f);
            let b = (0..c.len())
                .map(|l| {
                    let curvature = c
                        .get(l + 2)
                        .map(|&b2| ((l + 2) * (l + 1)) as f64 * b2)
                        .unwrap_or(0.0);
                    c[l] + curvature * scale
                })
                .collect();
            Modulation::polynomial(b, t_f)
        }
        ModulationKind::Trigonometric => Modulation::trigonometric(
            c.iter()
                .enumerate()
                .map(|(i, a)| a * harmonic_factor((i + 1) as f64))
                .collect(),
            t_f,
        ),
        ModulationKind::FourierSeries => {
            let k = c.len() / 2;
            let cos: Vec<f64> = (0..k).map(|m| c[m] * harmonic_factor(m as f64)).collect();
            let sin: Vec<f64> = (0..k)
                .map(|m| c[k + m] * harmonic_factor((m + 1) as f64))
                .collect();
            Modulation::fourier(&cos, &sin, t_f)
        }
        ModulationKind::ConstantBaseline | ModulationKind::BangBang => Ok(m.clone()),
        ModulationKind::Sampled => {
            let n = m.samples().map_or(0, |s| s.len());
            if n < 5 {
                return Err(ReadoutError::Resolution(format!(
                    "need at least 5 samples to take a second derivative, got {n}"
                )));
            }
            let times = m.sample_times().unwrap_or_default();
            let values = times
                .iter()
                .map(|&t| {
                    let d = m.eval(t);
                    d.value + d.second / w2
                })
                .collect();
            Modulation::sampled(values, t_f)
        }
    }
}

/// Boundary residuals of an auxiliary waveform.
///
/// `residuals` holds g_c(0), g_c(t_f), ġ_c(0), ġ_c(t_f), g̈_c(0), g̈_c(t_f)
/// in SI units; `normalized` divides them by g_z0, g_z0/t_f and g_z0/t_f².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub residuals: [f64; 6],
    pub normalized: [f64; 6],
    /// ∫₀^{t_f} g_c divided by g_z0·π/(2κ).
    pub displacement_integral: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl BoundaryReport {
    pub fn max_normalized_residual(&self) -> f64 {
        self.normalized.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn displacement_error(&self) -> f64 {
        (self.displacement_integral - 1.0).abs()
    }

    pub const LABELS: [&'static str; 6] = [
        "g_c(0)",
        "g_c(t_f)",
        "dg_c/dt(0)",
        "dg_c/dt(t_f)",
        "d2g_c/dt2(0)",
        "d2g_c/dt2(t_f)",
    ];
}

/// Checks the six endpoint conditions and the displacement constraint.
pub fn verify_boundaries(m: &Modulation, p: &SystemParams, tol: f64) -> BoundaryReport {
    let t_f = m.t_f();
    let start = m.eval(0.0);
    let end = m.eval(t_f);
    let residuals = [
        start.value,
        end.value,
        start.first,
        end.first,
        start.second,
        end.second,
    ];
    let scale = if p.g_z0 > 0.0 { p.g_z0 } else { 1.0 };
    let units = [
        scale,
        scale,
        scale / t_f,
        scale / t_f,
        scale / (t_f * t_f),
        scale / (t_f * t_f),
    ];
    let mut normalized = [0.0; 6];
    for i in 0..6 {
        normalized[i] = residuals[i] / units[i];
    }
    let target = p.displacement_target();
    let quad_tol = 1e-10 * scale * t_f;
    let displacement_integral = if target != 0.0 {
        m.integral(quad_tol) / target
    } else {
        // g_z0 = 0: the constraint asks for zero net displacement
        1.0 + m.integral(quad_tol)
    };
    let passed = normalized.iter().all(|r| r.abs() < tol)
        && (displacement_integral - 1.0).abs() < tol;
    BoundaryReport {
        residuals,
        normalized,
        displacement_integral,
        tolerance: tol,
        passed,
    }
}

/// max over `n` grid points of |g̈_c + ω_r²(g_c − g_z)| / (ω_r²·max|g_c|).
pub fn euler_lagrange_residual(gc: &Modulation, gz: &Modulation, omega_r: f64, n: usize) -> f64 {
    let t_f = gc.t_f().min(gz.t_f());
    let w2 = omega_r * omega_r;
    let grid = crate::params::linspace(0.0, t_f, n.max(2));
    let mut worst: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for &t in &grid {
        let c = gc.eval(t);
        let z = gz.value(t);
        worst = worst.max((c.second + w2 * (c.value - z)).abs());
        peak = peak.max(c.value.abs());
    }
    if peak == 0.0 {
        return if worst == 0.0 { 0.0 } else { f64::INFINITY };
    }
    worst / (w2 * peak)
}
