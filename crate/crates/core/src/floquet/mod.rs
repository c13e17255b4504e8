//! Counter-diabatic driving and its Floquet emulation.
//!
//! The counter-diabatic term for the longitudinal Hamiltonian is
//! `−i (ġ_z/ω_r) σ^z (a† − a)`. It can be traded for a rotated-frame
//! coupling [`effective_gz`], or emulated with only the operators already
//! present by the fast drive
//!
//! ```text
//! H_FE(t) = Ων sin(νt) (σ^z + a†a) + λ(t) σ^z (a† + a),   λ(t) = C₁ cos(νt).
//! ```
//!
//! In the frame rotating with the first term, the period average of
//! `λ(t) e^{−iΩ cos νt}` is `−i C₁ J₁(Ω)`, so `C₁ = ġ_z / (ω_r J₁(Ω))`
//! reproduces the counter-diabatic term at leading Magnus order.

mod bessel;

pub use bessel::{bessel_j, bessel_j_series};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{ReadoutError, Result};
use crate::modulation::Modulation;
use crate::pulse_design::gz_from_gc;
use crate::quadrature::adaptive_simpson_complex;

/// |J₁(Ω)| below this is treated as a Bessel zero.
pub const BESSEL_ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetSpec {
    /// Ω, dimensionless drive amplitude.
    #[serde(rename = "Omega")]
    pub omega: f64,
    /// ν in rad/s.
    pub nu: f64,
}

impl FloquetSpec {
    pub fn new(omega: f64, nu: f64) -> Result<Self> {
        let s = FloquetSpec { omega, nu };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(ReadoutError::Input(format!("nu = {} must be positive", self.nu)));
        }
        if !self.omega.is_finite() {
            return Err(ReadoutError::Input("Omega must be finite".into()));
        }
        Ok(())
    }

    /// J₁(Ω), or a singular-coefficient error near a Bessel zero.
    pub fn j1(&self) -> Result<f64> {
        let j1 = bessel_j(1, self.omega);
        if j1.abs() < BESSEL_ZERO_TOL {
            return Err(ReadoutError::Singular(format!(
                "J1(Omega) = {j1:e} vanishes at Omega = {}",
                self.omega
            )));
        }
        Ok(j1)
    }

    /// Plausibility guard ν ≤ ω_r/10.
    pub fn is_slow_against(&self, omega_r: f64) -> bool {
        self.nu <= omega_r / 10.0
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.nu
    }

    /// ∫₀^t Ων sin(νs) ds = Ω(1 − cos νt), the phase imprinted by the
    /// diagonal drive on a†a.
    pub fn frame_phase(&self, t: f64) -> f64 {
        self.omega * (1.0 - (self.nu * t).cos())
    }
}

/// ġ_z(t)/ω_r, the amplitude of the counter-diabatic term.
pub fn cd_amplitude(m: &Modulation, omega_r: f64, t: f64) -> Result<f64> {
    Ok(m.checked_eval(t)?.first / omega_r)
}

/// Rotated-frame coupling g̃_z = g_z + g̈_z/ω_r².
pub fn effective_gz(m: &Modulation, omega_r: f64) -> Result<Modulation> {
    gz_from_gc(m, omega_r)
}

/// Amplitudes of the two Floquet terms at time t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetAmplitudes {
    /// Ων sin νt, multiplying σ^z + a†a.
    pub diag_amp: f64,
    /// ġ_z cos νt / (ω_r J₁(Ω)), multiplying σ^z(a† + a).
    pub coupling_amp: f64,
}

pub fn floquet_drive(
    m: &Modulation,
    omega_r: f64,
    spec: &FloquetSpec,
    t: f64,
) -> Result<FloquetAmplitudes> {
    let j1 = spec.j1()?;
    let gdot = m.checked_eval(t)?.first;
    let (s, c) = (spec.nu * t).sin_cos();
    Ok(FloquetAmplitudes {
        diag_amp: spec.omega * spec.nu * s,
        coupling_amp: gdot * c / (omega_r * j1),
    })
}

/// C₁ = ġ_z / (ω_r J₁(Ω)).
pub fn first_harmonic_coefficient(spec: &FloquetSpec, gz_dot: f64, omega_r: f64) -> Result<f64> {
    Ok(gz_dot / (omega_r * spec.j1()?))
}

/// (1/T)∫₀^T C cos(nνt) e^{−iΩ cos νt} dt by quadrature. Equals (−i)ⁿ C Jₙ(Ω).
pub fn magnus_average_harmonic(coeff: f64, n: u32, spec: &FloquetSpec) -> Complex64 {
    // α = νt turns the period average into (1/2π)∫₀^{2π}
    let integral = adaptive_simpson_complex(
        |a| Complex64::from_polar(1.0, -spec.omega * a.cos()) * (n as f64 * a).cos(),
        0.0,
        2.0 * PI,
        1e-15,
    );
    coeff * integral / (2.0 * PI)
}

/// Leading Magnus average of the rotated coupling for λ(t) = `lambda_coeff`·cos νt,
/// and whether it reproduces the counter-diabatic amplitude −i ġ_z/ω_r to a
/// relative 1e-8.
pub fn magnus_average(
    lambda_coeff: f64,
    spec: &FloquetSpec,
    gz_dot: f64,
    omega_r: f64,
) -> (Complex64, bool) {
    let avg = magnus_average_harmonic(lambda_coeff, 1, spec);
    let target = Complex64::new(0.0, -gz_dot / omega_r);
    let scale = target.norm().max(f64::MIN_POSITIVE);
    (avg, (avg - target).norm() <= 1e-8 * scale)
}

/// Serializable description of a Floquet drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetDescriptor {
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub nu: f64,
    pub gz_ref: Modulation,
    pub sign_convention: String,
}

impl FloquetDescriptor {
    pub fn new(spec: &FloquetSpec, gz: &Modulation) -> Self {
        FloquetDescriptor {
            omega: spec.omega,
            nu: spec.nu,
            gz_ref: gz.clone(),
            sign_convention: "C1 = +dg_z/dt / (omega_r * J1(Omega)); average = -i C1 J1(Omega)".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SystemParams;
    use crate::pulse_design::{gz_from_gc, polynomial_ansatz};
    use approx::assert_relative_eq;

    #[test]
    fn cd_amplitude_cases() {
        let c = Modulation::constant(3.0, 1.0).unwrap();
        assert_eq!(cd_amplitude(&c, 10.0, 0.4).unwrap(), 0.0);
        let ramp = Modulation::polynomial(vec![0.0, 2.0], 0.5).unwrap();
        assert_relative_eq!(cd_amplitude(&ramp, 10.0, 0.1).unwrap(), 2.0 / (10.0 * 0.5));
        let p = SystemParams::standard();
        let gz = gz_from_gc(&polynomial_ansatz(&p), p.omega_r).unwrap();
        let mid = cd_amplitude(&gz, p.omega_r, p.t_f / 2.0).unwrap();
        let peak = gz.amplitude_scale() / (p.omega_r * p.t_f);
        assert!(mid.abs() < 1e-9 * peak);
        assert!(cd_amplitude(&gz, p.omega_r, 2.0 * p.t_f).is_err());
    }

    #[test]
    fn effective_gz_sine() {
        let (a, w, wr) = (2.0, 3.0, 40.0);
        let m = Modulation::trigonometric(vec![a], PI / w).unwrap();
        let e = effective_gz(&m, wr).unwrap();
        for i in 0..10 {
            let t = 0.1 * i as f64;
            assert_relative_eq!(e.value(t), a * (1.0 - w * w / (wr * wr)) * (w * t).sin(), epsilon = 1e-12);
        }
        let twice = effective_gz(&e, wr).unwrap();
        let diff = (twice.value(0.5) - e.value(0.5)).abs();
        let expected = a * (w / wr).powi(2) * (1.0 - (w / wr).powi(2)) * (w * 0.5).sin();
        assert_relative_eq!(diff, expected.abs(), max_relative = 1e-9);
    }

    #[test]
    fn drive_nodes() {
        let spec = FloquetSpec::new(1.0, 2.0).unwrap();
        let m = Modulation::polynomial(vec![0.0, 1.0], 10.0).unwrap();
        let at = |t| floquet_drive(&m, 5.0, &spec, t).unwrap();
        assert!(at(PI / 4.0).coupling_amp.abs() < 1e-15);
        assert_eq!(at(0.0).diag_amp, 0.0);
        assert_relative_eq!(at(0.0).coupling_amp, 0.1 / (5.0 * 0.440_050_585_744_933_5), max_relative = 1e-11);
    }

    #[test]
    fn bessel_zero_is_singular() {
        let spec = FloquetSpec::new(0.0, 1.0).unwrap();
        let m = Modulation::constant(1.0, 1.0).unwrap();
        assert!(matches!(floquet_drive(&m, 1.0, &spec, 0.5), Err(ReadoutError::Singular(_))));
        let spec = FloquetSpec::new(3.831_705_970_207_512, 1.0).unwrap();
        assert!(spec.j1().is_err());
        assert!(FloquetSpec::new(1.0, 0.0).is_err());
    }

    #[test]
    fn magnus_reproduces_cd() {
        let spec = FloquetSpec::new(1.0, 7.0).unwrap();
        let (gdot, wr) = (3.0e17, 4.0e10);
        let c1 = first_harmonic_coefficient(&spec, gdot, wr).unwrap();
        let (avg, ok) = magnus_average(c1, &spec, gdot, wr);
        assert!(ok);
        assert_relative_eq!(avg.norm(), gdot / wr, max_relative = 1e-8);
        // opposite sign has the right magnitude but the wrong phase
        let (avg, ok) = magnus_average(-c1, &spec, gdot, wr);
        assert!(!ok);
        assert_relative_eq!(avg.norm(), gdot / wr, max_relative = 1e-8);
        let (avg, _) = magnus_average(0.0, &spec, gdot, wr);
        assert_eq!(avg.norm(), 0.0);
    }

    #[test]
    fn even_harmonics_are_real() {
        let spec = FloquetSpec::new(1.3, 1.0).unwrap();
        for n in [0, 2, 4] {
            let avg = magnus_average_harmonic(1.0, n, &spec);
            assert!(avg.im.abs() < 1e-13);
        }
        for n in [1, 3] {
            let avg = magnus_average_harmonic(1.0, n, &spec);
            assert!(avg.re.abs() < 1e-13);
            assert_relative_eq!(avg.im.abs(), bessel_j_series(n, 1.3).abs(), epsilon = 1e-12);
        }
    }

    #[test]
    fn small_omega_limit() {
        let spec = FloquetSpec::new(1e-8, 1.0).unwrap();
        assert!(magnus_average_harmonic(1.0, 1, &spec).norm() < 1e-8);
    }

    #[test]
    fn descriptor_json() {
        let spec = FloquetSpec::new(1.0, 2.0).unwrap();
        let d = FloquetDescriptor::new(&spec, &Modulation::constant(1.0, 1.0).unwrap());
        let v: serde_json::Value = serde_json::to_value(&d).unwrap();
        for key in ["Omega", "nu", "gz_ref", "sign_convention"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
