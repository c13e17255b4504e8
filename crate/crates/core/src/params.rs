//! Physical constants of the readout problem.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{ReadoutError, Result};

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge (C).
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;
/// Reduced flux quantum ħ/2e (Wb).
pub const REDUCED_FLUX_QUANTUM: f64 = HBAR / (2.0 * ELECTRON_CHARGE);

/// Converts a frequency in Hz to an angular frequency in rad/s.
pub fn two_pi(hz: f64) -> f64 {
    2.0 * PI * hz
}

/// Qubit–cavity parameters. All rates are angular (rad/s), times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_q: f64,
    pub omega_r: f64,
    pub kappa: f64,
    pub g_z0: f64,
    pub t_f: f64,
}

impl SystemParams {
    pub fn new(omega_q: f64, omega_r: f64, kappa: f64, g_z0: f64, t_f: f64) -> Result<Self> {
        let p = SystemParams {
            omega_q,
            omega_r,
            kappa,
            g_z0,
            t_f,
        };
        p.validate()?;
        Ok(p)
    }

    /// κ/2π = 1 MHz, g_z0/2π = 21 MHz, ω_r/2π = 6.6 GHz, t_f = π/(100κ).
    ///
    /// ω_q only enters lab-frame phases; 2π × 3.28 GHz is the circuit-model
    /// qubit frequency.
    pub fn standard() -> Self {
        let kappa = two_pi(1.0e6);
        SystemParams {
            omega_q: two_pi(3.28e9),
            omega_r: two_pi(6.6e9),
            kappa,
            g_z0: two_pi(21.0e6),
            t_f: PI / (100.0 * kappa),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega_q, self.omega_r, self.kappa, self.g_z0, self.t_f]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(ReadoutError::Input("system parameters must be finite".into()));
        }
        if self.omega_r <= 0.0 {
            return Err(ReadoutError::Input("omega_r must be positive".into()));
        }
        if self.kappa <= 0.0 {
            return Err(ReadoutError::Input("kappa must be positive".into()));
        }
        if self.t_f <= 0.0 {
            return Err(ReadoutError::Input("t_f must be positive".into()));
        }
        if self.g_z0 < 0.0 {
            return Err(ReadoutError::Input("g_z0 must be non-negative".into()));
        }
        Ok(())
    }

    /// Plausibility guard: the cavity should be a good oscillator,
    /// κ ≤ ω_r/10. Not an error, callers decide whether to warn.
    pub fn kappa_is_plausible(&self) -> bool {
        self.kappa <= self.omega_r / 10.0
    }

    /// Target of the displacement constraint, ∫g_c = g_z0·π/(2κ).
    pub fn displacement_target(&self) -> f64 {
        self.g_z0 * PI / (2.0 * self.kappa)
    }

    pub fn with_t_f(mut self, t_f: f64) -> Self {
        self.t_f = t_f;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_g_z0(mut self, g_z0: f64) -> Self {
        self.g_z0 = g_z0;
        self
    }
}

/// Uniform grid of `n` points on `[start, end]`.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { end } else { start + step * i as f64 })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_values() {
        let p = SystemParams::standard();
        assert!((p.g_z0 / p.kappa - 21.0).abs() < 1e-12);
        assert!((p.t_f - 5.0e-9).abs() < 1e-20);
        assert!(p.kappa_is_plausible());
        p.validate().unwrap();
    }

    #[test]
    fn rejects_bad_params() {
        assert!(SystemParams::new(0.0, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(SystemParams::new(0.0, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(SystemParams::new(0.0, 1.0, 1.0, -1.0, 1.0).is_err());
        assert!(SystemParams::new(0.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(SystemParams::new(0.0, 1.0, 1.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn implausible_kappa_flagged() {
        let p = SystemParams::standard().with_kappa(SystemParams::standard().omega_r);
        assert!(!p.kappa_is_plausible());
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.0, 3.0, 4);
        assert_eq!(g, vec![0.0, 1.0, 2.0, 3.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }
}
