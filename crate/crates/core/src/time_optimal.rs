//! Bang-bang analysis of the minimal readout time.
//!
//! The state `(g_c, g_d = ġ_c)` obeys `ġ_d = ω_r² (u − g_c)` with control
//! `0 ≤ u ≤ u_m`. Along a constant-u arc the state moves on the circle
//! `(g_c − u)² + (g_d/ω_r)² = const`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{ReadoutError, Result};
use crate::params::SystemParams;

/// Bang count beyond which a target is declared unreachable.
pub const DEFAULT_MAX_RETURNS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlProblem {
    pub u_max: f64,
    pub omega_r: f64,
    /// Required ∫ g_c dt.
    pub target_displacement: f64,
    /// (g_c, g_d) at t = 0.
    pub start: (f64, f64),
    /// (g_c, g_d) at t = t_f.
    pub end: (f64, f64),
    #[serde(default = "default_max_returns")]
    pub max_returns: u64,
}

fn default_max_returns() -> u64 {
    DEFAULT_MAX_RETURNS
}

impl ControlProblem {
    /// Rest-to-rest problem with the displacement target g_z0 π/(2κ).
    pub fn for_params(p: &SystemParams, u_max: f64) -> Result<Self> {
        let c = ControlProblem {
            u_max,
            omega_r: p.omega_r,
            target_displacement: p.displacement_target(),
            start: (0.0, 0.0),
            end: (0.0, 0.0),
            max_returns: DEFAULT_MAX_RETURNS,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_max > 0.0 && self.u_max.is_finite()) {
            return Err(ReadoutError::Input("u_max must be positive".into()));
        }
        if !(self.omega_r > 0.0 && self.omega_r.is_finite()) {
            return Err(ReadoutError::Input("omega_r must be positive".into()));
        }
        if !(self.target_displacement >= 0.0 && self.target_displacement.is_finite()) {
            return Err(ReadoutError::Input("target displacement must be finite and >= 0".into()));
        }
        let b = [self.start.0, self.start.1, self.end.0, self.end.1];
        if !b.iter().all(|v| v.is_finite()) {
            return Err(ReadoutError::Input("boundary states must be finite".into()));
        }
        Ok(())
    }
}

/// (g_c, g_d) samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrajectory {
    pub times: Vec<f64>,
    pub g_c: Vec<f64>,
    pub g_d: Vec<f64>,
}

/// Constant-u arc from an arbitrary state.
pub fn arc_trajectory(u: f64, start: (f64, f64), omega_r: f64, grid: &[f64]) -> PhaseTrajectory {
    let (g0, d0) = start;
    let (g_c, g_d) = grid
        .iter()
        .map(|&t| {
            let (s, c) = (omega_r * t).sin_cos();
            (
                u + (g0 - u) * c + d0 / omega_r * s,
                -omega_r * (g0 - u) * s + d0 * c,
            )
        })
        .unzip();
    PhaseTrajectory { times: grid.to_vec(), g_c, g_d }
}

/// u = u_m from rest: g_c = u_m(1 − cos ω_r t), g_d = ω_r u_m sin ω_r t.
pub fn bang_trajectory(u_m: f64, omega_r: f64, grid: &[f64]) -> Result<PhaseTrajectory> {
    if grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(ReadoutError::Domain("time grid must be non-negative".into()));
    }
    Ok(arc_trajectory(u_m, (0.0, 0.0), omega_r, grid))
}

/// (g_c − u)² + (g_d/ω_r)².
pub fn circle_invariant(u: f64, g_c: f64, g_d: f64, omega_r: f64) -> f64 {
    (g_c - u).powi(2) + (g_d / omega_r).powi(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjointTrajectory {
    pub times: Vec<f64>,
    pub p_g: Vec<f64>,
    /// Switching function Φ = p_d.
    pub p_d: Vec<f64>,
}

impl AdjointTrajectory {
    /// Times where Φ changes sign, located by linear interpolation.
    pub fn switch_times(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 1..self.times.len() {
            let (a, b) = (self.p_d[i - 1], self.p_d[i]);
            if a == 0.0 && i == 1 {
                continue;
            }
            if (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0) {
                if b == 0.0 {
                    out.push(self.times[i]);
                } else {
                    let (t0, t1) = (self.times[i - 1], self.times[i]);
                    out.push(t0 + (t1 - t0) * a / (a - b));
                }
            }
        }
        out.dedup();
        out
    }

    pub fn is_identically_zero(&self) -> bool {
        self.p_g.iter().chain(&self.p_d).all(|v| *v == 0.0)
    }
}

/// Harmonic adjoint `ṗ_g = ω_r² p_d`, `ṗ_d = −p_g`:
/// p_d = p_d0 cos ω_r t − (p_g0/ω_r) sin ω_r t, p_g = ω_r p_d0 sin ω_r t + p_g0 cos ω_r t.
pub fn adjoint_trajectory(p_d0: f64, p_g0: f64, omega_r: f64, grid: &[f64]) -> AdjointTrajectory {
    let (p_g, p_d) = grid
        .iter()
        .map(|&t| {
            let (s, c) = (omega_r * t).sin_cos();
            (omega_r * p_d0 * s + p_g0 * c, p_d0 * c - p_g0 / omega_r * s)
        })
        .unzip();
    AdjointTrajectory { times: grid.to_vec(), p_g, p_d }
}

/// u = u_m where Φ > 0, zero elsewhere.
pub fn control_law(u_m: f64, phi: f64) -> f64 {
    if phi > 0.0 {
        u_m
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimalTimeReport {
    /// 2π/ω_r, the first return of the single-bang arc to rest.
    pub t_zero_return: f64,
    /// π/(2ω_r), the value quoted for the same protocol.
    pub t_quoted: f64,
    /// k·2π/ω_r.
    pub t_min: f64,
    /// Zero returns needed to meet the target.
    pub k: u64,
    /// u_m · t_min.
    pub displacement_delivered: f64,
    pub target_displacement: f64,
    pub target_met: bool,
}

/// Smallest k with u_m · 2πk/ω_r ≥ target for the single-bang rest-to-rest
/// protocol.
pub fn minimal_time(problem: &ControlProblem) -> Result<MinimalTimeReport> {
    problem.validate()?;
    if problem.start != (0.0, 0.0) || problem.end != (0.0, 0.0) {
        return Err(ReadoutError::Input(
            "the single-bang protocol is defined rest to rest".into(),
        ));
    }
    let period = 2.0 * PI / problem.omega_r;
    let per_return = problem.u_max * period;
    let needed = problem.target_displacement / per_return;
    let mut k = needed.ceil();
    // guard against ceil of a value one ulp above an integer
    if k > 0.0 && (k - 1.0) * per_return >= problem.target_displacement {
        k -= 1.0;
    }
    if k > problem.max_returns as f64 {
        return Err(ReadoutError::Infeasible(format!(
            "target {:e} needs {k} returns of 2pi/omega_r, more than the limit {}",
            problem.target_displacement, problem.max_returns
        )));
    }
    let k = k as u64;
    let t_min = k as f64 * period;
    let delivered = problem.u_max * t_min;
    Ok(MinimalTimeReport {
        t_zero_return: period,
        t_quoted: PI / (2.0 * problem.omega_r),
        t_min,
        k,
        displacement_delivered: delivered,
        target_displacement: problem.target_displacement,
        target_met: delivered >= problem.target_displacement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::two_pi;
    use approx::assert_relative_eq;

    #[test]
    fn bang_closed_form() {
        let (u, w) = (2.0, 3.0);
        let tr = bang_trajectory(u, w, &[0.0, PI / w, 2.0 * PI / w]).unwrap();
        assert_eq!((tr.g_c[0], tr.g_d[0]), (0.0, 0.0));
        assert_relative_eq!(tr.g_c[1], 2.0 * u, epsilon = 1e-14);
        assert!(tr.g_d[1].abs() < 1e-14);
        assert!(tr.g_c[2].abs() < 1e-14 && tr.g_d[2].abs() < 1e-13);
        assert!(bang_trajectory(u, w, &[-1.0]).is_err());
    }

    #[test]
    fn arc_obeys_dynamics() {
        let (u, w) = (0.7, 2.5);
        let h = 1e-5;
        let t = 0.37;
        let tr = arc_trajectory(u, (0.3, -0.4), w, &[t - h, t, t + h]);
        let gd_fd = (tr.g_c[2] - tr.g_c[0]) / (2.0 * h);
        assert_relative_eq!(gd_fd, tr.g_d[1], max_relative = 1e-8);
        let acc = (tr.g_d[2] - tr.g_d[0]) / (2.0 * h);
        assert_relative_eq!(acc, w * w * (u - tr.g_c[1]), max_relative = 1e-7);
    }

    #[test]
    fn adjoint_cases() {
        let w = 4.0;
        let grid: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        let z = adjoint_trajectory(0.0, 0.0, w, &grid);
        assert!(z.is_identically_zero());
        assert!(z.switch_times().is_empty());
        let a = adjoint_trajectory(1.0, 0.0, w, &grid);
        for (t, pd) in grid.iter().zip(&a.p_d) {
            assert_relative_eq!(*pd, (w * t).cos(), epsilon = 1e-15);
        }
        let sw = a.switch_times();
        assert_relative_eq!(sw[0], PI / (2.0 * w), epsilon = 1e-4);
        assert_relative_eq!(sw[1], 3.0 * PI / (2.0 * w), epsilon = 1e-4);
        assert!(!a.is_identically_zero());
    }

    #[test]
    fn adjoint_obeys_system() {
        let w = 3.0;
        let h = 1e-5;
        let a = adjoint_trajectory(0.4, -1.1, w, &[0.5 - h, 0.5, 0.5 + h]);
        assert_relative_eq!((a.p_g[2] - a.p_g[0]) / (2.0 * h), w * w * a.p_d[1], max_relative = 1e-8);
        assert_relative_eq!((a.p_d[2] - a.p_d[0]) / (2.0 * h), -a.p_g[1], max_relative = 1e-8);
    }

    #[test]
    fn control_law_bang() {
        assert_eq!(control_law(2.0, 0.1), 2.0);
        assert_eq!(control_law(2.0, -0.1), 0.0);
    }

    #[test]
    fn minimal_time_cases() {
        let w = two_pi(6.6e9);
        let mut prob = ControlProblem {
            u_max: two_pi(2.57e9),
            omega_r: w,
            target_displacement: 1e-3,
            start: (0.0, 0.0),
            end: (0.0, 0.0),
            max_returns: 1000,
        };
        let r = minimal_time(&prob).unwrap();
        assert_eq!(r.k, 1);
        assert_relative_eq!(r.t_zero_return, 1.0 / 6.6e9, max_relative = 1e-12);
        assert_relative_eq!(r.t_quoted * 4.0, r.t_zero_return, max_relative = 1e-12);
        prob.u_max *= 2.0;
        let r2 = minimal_time(&prob).unwrap();
        assert_eq!(r2.t_zero_return, r.t_zero_return);
        assert_relative_eq!(r2.displacement_delivered, 2.0 * r.displacement_delivered);
        prob.target_displacement = 0.0;
        let r0 = minimal_time(&prob).unwrap();
        assert_eq!((r0.k, r0.t_min), (0, 0.0));
        assert!(r0.target_met);
        prob.target_displacement = 1e9;
        assert!(matches!(minimal_time(&prob), Err(ReadoutError::Infeasible(_))));
    }

    #[test]
    fn standard_target() {
        let p = SystemParams::standard();
        let prob = ControlProblem::for_params(&p, two_pi(2.57e9)).unwrap();
        let r = minimal_time(&prob).unwrap();
        assert!(r.target_met);
        assert!(r.k >= 1);
        assert!((r.k - 1) as f64 * prob.u_max * r.t_zero_return < prob.target_displacement);
        assert!(ControlProblem::for_params(&p, 0.0).is_err());
    }
}
