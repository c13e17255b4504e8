//! Homodyne signal, noise and signal-to-noise ratio.
//!
//! The homodyne operator integrates the output quadrature selected by φ,
//! `M(τ) = √κ ∫₀^τ (a_out† e^{iφ} + a_out e^{−iφ}) dt` with `a_out = √κ·a`.
//! Its branch means give the signal |⟨M⟩_e − ⟨M⟩_g|; for vacuum input each
//! branch contributes a variance κτ, squeezed input rescales that by
//! cosh 2r + sinh 2r·cos 2(φ − θ).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

use crate::cavity::CavityTrajectory;
use crate::error::{ReadoutError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeSpec {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl SqueezeSpec {
    pub fn new(r: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(ReadoutError::Input("squeezing parameter r must be >= 0".into()));
        }
        Ok(SqueezeSpec { r, theta, phi })
    }

    /// From the variance ratio e^{2r} ("20 dB" is stored as e^{2r} = 100).
    pub fn from_power_ratio(e2r: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(e2r >= 1.0) {
            return Err(ReadoutError::Input("power ratio e^{2r} must be >= 1".into()));
        }
        Self::new(0.5 * e2r.ln(), theta, phi)
    }

    /// Squeezed quadrature aligned with the homodyne angle: θ = φ − π/2.
    pub fn orthogonal(r: f64, phi: f64) -> Result<Self> {
        Self::new(r, phi - std::f64::consts::FRAC_PI_2, phi)
    }

    /// e^{2r} = 100 with θ = φ = π/4. With the cos 2(φ − θ) noise law this
    /// choice amplifies the measured quadrature noise.
    pub fn aligned_20db() -> Self {
        SqueezeSpec {
            r: 0.5 * 100f64.ln(),
            theta: std::f64::consts::FRAC_PI_4,
            phi: std::f64::consts::FRAC_PI_4,
        }
    }

    /// cosh 2r + sinh 2r·cos 2(φ − θ).
    pub fn noise_factor(&self) -> f64 {
        let two_r = 2.0 * self.r;
        two_r.cosh() + two_r.sinh() * (2.0 * (self.phi - self.theta)).cos()
    }
}

/// Per-branch homodyne noise variance.
pub fn noise_power(kappa: f64, tau: f64, sq: Option<&SqueezeSpec>) -> Result<f64> {
    if tau < 0.0 {
        return Err(ReadoutError::Domain(format!("measuring time τ = {tau:e} is negative")));
    }
    let factor = sq.map_or(1.0, SqueezeSpec::noise_factor);
    Ok(kappa * tau * factor)
}

/// Homodyne integrand 2κ·Re(e^{−iφ}(⟨a⟩_e − ⟨a⟩_g)) and its cumulative
/// trapezoid over the trajectory grid, with ⟨a⟩ = 0 assumed at t = 0.
struct Cumulative {
    integrand: Vec<f64>,
    total: Vec<f64>,
}

impl Cumulative {
    fn new(traj: &CavityTrajectory, phi: f64) -> Self {
        let rot = Complex64::from_polar(1.0, -phi);
        let integrand: Vec<f64> = traj
            .alpha_e
            .iter()
            .zip(&traj.alpha_g)
            .map(|(e, g)| 2.0 * traj.kappa * ((e - g) * rot).re)
            .collect();
        let mut total = Vec::with_capacity(integrand.len());
        let mut acc = 0.0;
        let (mut t_prev, mut f_prev) = (0.0, 0.0);
        for (&t, &f) in traj.times.iter().zip(&integrand) {
            acc += 0.5 * (t - t_prev) * (f + f_prev);
            total.push(acc);
            t_prev = t;
            f_prev = f;
        }
        Cumulative { integrand, total }
    }

    fn at(&self, times: &[f64], tau: f64) -> Result<f64> {
        let last = *times
            .last()
            .ok_or_else(|| ReadoutError::Input("empty trajectory".into()))?;
        if tau < 0.0 || tau > last * (1.0 + 1e-12) {
            return Err(ReadoutError::Domain(format!(
                "τ = {tau:e} outside trajectory support [0, {last:e}]"
            )));
        }
        let idx = times.partition_point(|&t| t < tau);
        if idx >= times.len() {
            return Ok(self.total[times.len() - 1]);
        }
        if times[idx] == tau {
            return Ok(self.total[idx]);
        }
        let (t0, c0, f0) = if idx == 0 {
            (0.0, 0.0, 0.0)
        } else {
            (times[idx - 1], self.total[idx - 1], self.integrand[idx - 1])
        };
        let f1 = self.integrand[idx];
        let f_tau = f0 + (f1 - f0) * (tau - t0) / (times[idx] - t0);
        Ok(c0 + 0.5 * (tau - t0) * (f0 + f_tau))
    }
}

/// |⟨M⟩_e − ⟨M⟩_g| at measuring time τ.
pub fn homodyne_signal(traj: &CavityTrajectory, phi: f64, tau: f64) -> Result<f64> {
    Ok(Cumulative::new(traj, phi).at(&traj.times, tau)?.abs())
}

/// Signal, noise and SNR on a grid of measuring times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrCurve {
    pub taus: Vec<f64>,
    pub signal: Vec<f64>,
    pub noise_var_e: Vec<f64>,
    pub noise_var_g: Vec<f64>,
    pub snr: Vec<f64>,
    pub phi: f64,
    pub squeeze: Option<SqueezeSpec>,
}

impl SnrCurve {
    /// Builds a curve from raw series, for synthetic inputs and tests.
    pub fn from_values(taus: Vec<f64>, snr: Vec<f64>) -> Result<Self> {
        if taus.len() != snr.len() {
            return Err(ReadoutError::Dimension {
                expected: taus.len(),
                got: snr.len(),
            });
        }
        let n = taus.len();
        Ok(SnrCurve {
            signal: snr.clone(),
            noise_var_e: vec![0.5; n],
            noise_var_g: vec![0.5; n],
            taus,
            snr,
            phi: 0.0,
            squeeze: None,
        })
    }

    /// CSV with columns τ, signal, total noise variance, SNR.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "tau,signal,noise_var,snr")?;
        for i in 0..self.taus.len() {
            writeln!(
                w,
                "{:e},{:e},{:e},{:e}",
                self.taus[i],
                self.signal[i],
                self.noise_var_e[i] + self.noise_var_g[i],
                self.snr[i]
            )?;
        }
        Ok(())
    }
}

/// SNR = signal/√(N_e + N_g) at every τ in `taus`.
///
/// With squeezing the homodyne angle `phi` must equal `sq.phi`.
pub fn snr_curve(
    traj: &CavityTrajectory,
    phi: f64,
    taus: &[f64],
    sq: Option<&SqueezeSpec>,
) -> Result<SnrCurve> {
    if let Some(s) = sq {
        if (s.phi - phi).abs() > 1e-12 {
            return Err(ReadoutError::Input(format!(
                "homodyne angle {phi} differs from squeeze spec angle {}",
                s.phi
            )));
        }
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ReadoutError::Input("τ grid must be strictly increasing".into()));
    }
    let cum = Cumulative::new(traj, phi);
    let mut curve = SnrCurve {
        taus: taus.to_vec(),
        signal: Vec::with_capacity(taus.len()),
        noise_var_e: Vec::with_capacity(taus.len()),
        noise_var_g: Vec::with_capacity(taus.len()),
        snr: Vec::with_capacity(taus.len()),
        phi,
        squeeze: sq.copied(),
    };
    for &tau in taus {
        let signal = cum.at(&traj.times, tau)?.abs();
        let n = noise_power(traj.kappa, tau, sq)?;
        let snr = if n > 0.0 { signal / (2.0 * n).sqrt() } else { 0.0 };
        curve.signal.push(signal);
        curve.noise_var_e.push(n);
        curve.noise_var_g.push(n);
        curve.snr.push(snr);
    }
    Ok(curve)
}

/// Least-squares power-law fit of SNR against κτ over a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Slope of log SNR against log τ for τ in `[lo, hi]`. Since κ is fixed the
/// slope is the same against log κτ.
pub fn fit_scaling(curve: &SnrCurve, window: (f64, f64)) -> Result<ScalingFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(ReadoutError::Input(format!("bad fit window [{lo:e}, {hi:e}]")));
    }
    let pts: Vec<(f64, f64)> = curve
        .taus
        .iter()
        .zip(&curve.snr)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(&t, &s)| (t, s))
        .collect();
    if pts.len() < 10 {
        return Err(ReadoutError::Fit(format!(
            "need at least 10 points in the fit window, found {}",
            pts.len()
        )));
    }
    if let Some((t, s)) = pts.iter().find(|(_, s)| !(*s > 0.0)) {
        return Err(ReadoutError::Fit(format!("non-positive SNR {s:e} at τ = {t:e}")));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, s)| s.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(ScalingFit {
        exponent: sxy / sxx,
        window,
        points: pts.len(),
    })
}

pub fn fit_scaling_exponent(curve: &SnrCurve, window: (f64, f64)) -> Result<f64> {
    fit_scaling(curve, window).map(|f| f.exponent)
}

/// Log-spaced grid of `n` points on `[lo, hi]`, both positive.
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    crate::params::linspace(a, b, n)
        .into_iter()
        .enumerate()
        .map(|(i, x)| if i == n - 1 { hi } else if i == 0 { lo } else { x.exp() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::CavityTrajectory;
    use crate::modulation::Modulation;
    use crate::params::linspace;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn constant_traj(g0: f64, kappa: f64, t_f: f64, n: usize) -> CavityTrajectory {
        let m = Modulation::constant(g0, t_f).unwrap();
        CavityTrajectory::compute(&m, kappa, &linspace(0.0, t_f, n)).unwrap()
    }

    #[test]
    fn noise_limits() {
        let k = 2.0;
        let tau = 0.5;
        assert_eq!(noise_power(k, tau, None).unwrap(), 1.0);
        let r = 0.7;
        let sq0 = SqueezeSpec::new(0.0, 0.3, 1.1).unwrap();
        assert_relative_eq!(noise_power(k, tau, Some(&sq0)).unwrap(), 1.0);
        let sq = SqueezeSpec::new(r, 0.2, 0.2 + FRAC_PI_2).unwrap();
        assert_relative_eq!(noise_power(k, tau, Some(&sq)).unwrap(), (-2.0 * r).exp(), max_relative = 1e-12);
        let sq = SqueezeSpec::new(r, 0.2, 0.2).unwrap();
        assert_relative_eq!(noise_power(k, tau, Some(&sq)).unwrap(), (2.0 * r).exp(), max_relative = 1e-12);
        assert!(noise_power(k, -1.0, None).is_err());
        assert!(SqueezeSpec::new(-0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn aligned_20db_values() {
        let s = SqueezeSpec::aligned_20db();
        assert_relative_eq!((2.0 * s.r).exp(), 100.0, max_relative = 1e-12);
        assert_relative_eq!(s.noise_factor(), 100.0, max_relative = 1e-12);
    }

    #[test]
    fn signal_quadrature_selection() {
        let kappa = 1.5;
        let traj = constant_traj(2.0, kappa, 1.0, 2001);
        // displacement is purely imaginary: φ = 0 sees nothing
        assert!(homodyne_signal(&traj, 0.0, 1.0).unwrap() < 1e-12);
        // φ = π/2: 4κ∫|⟨a⟩|
        let s = homodyne_signal(&traj, FRAC_PI_2, 1.0).unwrap();
        let a = |t: f64| 2.0 * 2.0 / kappa * (1.0 - (-kappa * t / 2.0).exp());
        let int = crate::quadrature::adaptive_simpson(a, 0.0, 1.0, 1e-12);
        assert_relative_eq!(s, 4.0 * kappa * int, max_relative = 1e-6);
        assert!(homodyne_signal(&traj, FRAC_PI_2, 1.5).is_err());
    }

    #[test]
    fn signal_between_grid_points() {
        let traj = constant_traj(2.0, 0.0, 1.0, 3);
        // κ = 0 gives zero signal by the √κ prefactor
        assert_eq!(homodyne_signal(&traj, FRAC_PI_2, 0.3).unwrap(), 0.0);
        let traj = constant_traj(1.0, 1e-9, 1.0, 5);
        let full = homodyne_signal(&traj, FRAC_PI_2, 1.0).unwrap();
        let part = homodyne_signal(&traj, FRAC_PI_2, 0.6).unwrap();
        // signal ∝ τ² for small κ
        assert_relative_eq!(part / full, 0.36, max_relative = 2e-2);
    }

    #[test]
    fn zero_modulation_zero_snr() {
        let traj = constant_traj(0.0, 1.0, 1.0, 11);
        let c = snr_curve(&traj, FRAC_PI_2, &linspace(0.0, 1.0, 11), None).unwrap();
        assert!(c.snr.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn squeezing_ratio() {
        let traj = constant_traj(1.0, 1.0, 1.0, 101);
        let taus = linspace(0.01, 1.0, 50);
        let sq = SqueezeSpec::from_power_ratio(100.0, 0.0, FRAC_PI_2).unwrap();
        let vac = snr_curve(&traj, FRAC_PI_2, &taus, None).unwrap();
        let squ = snr_curve(&traj, FRAC_PI_2, &taus, Some(&sq)).unwrap();
        for (a, b) in vac.snr.iter().zip(&squ.snr) {
            assert_relative_eq!(b / a, 10.0, max_relative = 1e-12);
        }
        let wrong = SqueezeSpec::new(1.0, 0.0, 0.3).unwrap();
        assert!(snr_curve(&traj, FRAC_PI_2, &taus, Some(&wrong)).is_err());
    }

    #[test]
    fn fit_exact_power_laws() {
        let taus = geomspace(1e-4, 1e-2, 40);
        let c = SnrCurve::from_values(taus.clone(), taus.iter().map(|t| (3.0 * t).powf(2.25)).collect()).unwrap();
        assert_relative_eq!(fit_scaling_exponent(&c, (1e-4, 1e-2)).unwrap(), 2.25, epsilon = 1e-10);
        let c = SnrCurve::from_values(taus.clone(), taus.iter().map(|t| 7.0 * t).collect()).unwrap();
        assert_relative_eq!(fit_scaling_exponent(&c, (1e-4, 1e-2)).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn fit_errors() {
        let taus = geomspace(1e-4, 1e-2, 40);
        let mut vals: Vec<f64> = taus.to_vec();
        vals[5] = 0.0;
        let c = SnrCurve::from_values(taus.clone(), vals).unwrap();
        assert!(matches!(fit_scaling_exponent(&c, (1e-4, 1e-2)), Err(ReadoutError::Fit(_))));
        let c = SnrCurve::from_values(taus.clone(), taus.clone()).unwrap();
        assert!(matches!(fit_scaling_exponent(&c, (1e-4, 1.1e-4)), Err(ReadoutError::Fit(_))));
        assert!(fit_scaling_exponent(&c, (1e-2, 1e-4)).is_err());
    }

    #[test]
    fn rotation_invariance() {
        let traj = constant_traj(1.0, 1.0, 1.0, 101);
        let taus = linspace(0.1, 1.0, 10);
        let a = snr_curve(&traj, 0.4, &taus, None).unwrap();
        let b = snr_curve(&traj.rotated(0.9), 0.4 + 0.9, &taus, None).unwrap();
        for (x, y) in a.snr.iter().zip(&b.snr) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }
}
