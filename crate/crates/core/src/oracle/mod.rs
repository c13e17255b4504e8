//! Brute-force Lindblad simulation of the qubit–cavity system.
//!
//! Solves `dρ/dt = −i[H, ρ] + κ(aρa† − ½{a†a, ρ})` on qubit ⊗ Fock(0..=N).
//! Every Hamiltonian handled here commutes with σ^z, so ρ splits into four
//! cavity blocks ρ_{qr} = ⟨q|ρ|r⟩ that evolve independently. Each qubit
//! branch s = ±1 sees
//!
//! ```text
//! H_s(t) = δ_s(t) + ε(t) a†a + s·c(t) a† + s·c*(t) a
//! ```
//!
//! and the blocks are stepped in the interaction picture of the diagonal
//! part, which removes the fast ω_r rotation of lab-frame runs. States are
//! rotated back before they are reported.

mod frame_check;
mod state;

pub use frame_check::{frame_elimination_check, FrameCheck};
pub use state::{
    annihilation, displaced_vacuum, expectation, full_operators, kron, sigma_z, QubitCavityState,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{self, Write};

use crate::cavity::{check_grid, pointer_separation, CavityTrajectory};
use crate::error::{ReadoutError, Result};
use crate::floquet::FloquetSpec;
use crate::modulation::Modulation;
use crate::ode::{integrate_rk4, integrate_rk45, AdaptiveOptions, OdeState};
use crate::params::SystemParams;
use state::field_of_block;

/// Population allowed in the two highest Fock levels.
pub const TRUNCATION_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    /// Rotating at ω_r: H = g_z σ^z(a† + a).
    Rotating,
    /// H = ω_q σ^z/2 + ω_r a†a + g_z σ^z(a† + a).
    Lab,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Rk4,
    Rk45 { rtol: f64, atol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    /// Step for RK4, initial step for RK45. `None` picks the default.
    #[serde(default)]
    pub dt: Option<f64>,
    pub method: Method,
    pub fock_truncation: usize,
    pub frame: Frame,
}

impl EvolutionConfig {
    pub fn rk4(fock_truncation: usize, frame: Frame) -> Self {
        EvolutionConfig {
            dt: None,
            method: Method::Rk4,
            fock_truncation,
            frame,
        }
    }
}

/// Branch-resolved generator in interaction-picture form.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Rotating { gz: Modulation },
    Lab { gz: Modulation, omega_q: f64, omega_r: f64 },
    /// H_FE(t) = Ων sin(νt)(σ^z + a†a) + ġ_z cos(νt)/(ω_r J₁(Ω)) σ^z(a† + a).
    Floquet { gz: Modulation, omega_r: f64, spec: FloquetSpec, inv_j1: f64 },
}

impl Generator {
    pub fn for_frame(p: &SystemParams, gz: &Modulation, frame: Frame) -> Self {
        match frame {
            Frame::Rotating => Generator::Rotating { gz: gz.clone() },
            Frame::Lab => Generator::Lab {
                gz: gz.clone(),
                omega_q: p.omega_q,
                omega_r: p.omega_r,
            },
        }
    }

    pub fn floquet(gz: &Modulation, omega_r: f64, spec: FloquetSpec) -> Result<Self> {
        let j1 = spec.j1()?;
        Ok(Generator::Floquet {
            gz: gz.clone(),
            omega_r,
            spec,
            inv_j1: 1.0 / j1,
        })
    }

    fn gz(&self) -> &Modulation {
        match self {
            Generator::Rotating { gz } | Generator::Lab { gz, .. } | Generator::Floquet { gz, .. } => gz,
        }
    }

    /// Interaction-picture drive c̃(t) of the σ^z = +1 branch.
    pub fn coupling(&self, t: f64) -> Complex64 {
        match self {
            Generator::Rotating { gz } => Complex64::new(gz.value(t), 0.0),
            Generator::Lab { gz, omega_r, .. } => Complex64::from_polar(gz.value(t), omega_r * t),
            Generator::Floquet { gz, omega_r, spec, inv_j1 } => {
                let lambda = gz.eval(t).first * (spec.nu * t).cos() * inv_j1 / omega_r;
                Complex64::from_polar(lambda, spec.frame_phase(t))
            }
        }
    }

    /// Φ(t) = ∫ε, the phase carried by a†a.
    pub fn cavity_phase(&self, t: f64) -> f64 {
        match self {
            Generator::Rotating { .. } => 0.0,
            Generator::Lab { omega_r, .. } => omega_r * t,
            Generator::Floquet { spec, .. } => spec.frame_phase(t),
        }
    }

    /// ∫δ₊, the phase carried by the σ^z = +1 branch.
    pub fn qubit_phase(&self, t: f64) -> f64 {
        match self {
            Generator::Rotating { .. } => 0.0,
            Generator::Lab { omega_q, .. } => 0.5 * omega_q * t,
            Generator::Floquet { spec, .. } => spec.frame_phase(t),
        }
    }

    /// Fastest angular frequency in the interaction-picture drive.
    pub fn max_frequency(&self) -> f64 {
        match self {
            Generator::Rotating { .. } => 0.0,
            Generator::Lab { omega_r, .. } => *omega_r,
            Generator::Floquet { spec, .. } => spec.nu * (1.0 + spec.omega.abs()),
        }
    }

    /// Default RK4 step: min(2π/(200·f_max), t_f/20000).
    pub fn default_dt(&self) -> f64 {
        let t_f = self.gz().t_f();
        let f = self.max_frequency();
        let by_freq = if f > 0.0 { 2.0 * PI / (200.0 * f) } else { f64::INFINITY };
        by_freq.min(t_f / 20000.0)
    }
}

/// Dense Hamiltonian of [`Frame`] at time t on truncation N.
pub fn build_hamiltonian(
    p: &SystemParams,
    m: &Modulation,
    frame: Frame,
    t: f64,
    fock_truncation: usize,
) -> DMatrix<Complex64> {
    let d = fock_truncation + 1;
    let (sz, a, n) = full_operators(d);
    let x = &a + a.adjoint();
    let g = Complex64::new(m.value(t), 0.0);
    let mut h = &sz * &x * g;
    if frame == Frame::Lab {
        h += &sz * Complex64::new(0.5 * p.omega_q, 0.0) + &n * Complex64::new(p.omega_r, 0.0);
    }
    h
}

/// Blocks ρ_ee, ρ_eg, ρ_gg (ρ_ge = ρ_eg†).
#[derive(Debug, Clone)]
struct Blocks([DMatrix<Complex64>; 3]);

impl OdeState for Blocks {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.0.iter_mut().zip(&x.0) {
            s.axpy(a, v);
        }
    }
    fn max_abs(&self) -> f64 {
        self.0.iter().map(OdeState::max_abs).fold(0.0, f64::max)
    }
    fn zeros_like(&self) -> Self {
        Blocks(std::array::from_fn(|i| self.0[i].zeros_like()))
    }
}

/// dX/dt = −i(H_l X − X H_r) + κ D[a]X with H = c a† + c* a on each side.
fn block_rhs(x: &DMatrix<Complex64>, cl: Complex64, cr: Complex64, kappa: f64, sq: &[f64]) -> DMatrix<Complex64> {
    let d = x.nrows();
    let minus_i = Complex64::new(0.0, -1.0);
    let (clc, crc) = (cl.conj(), cr.conj());
    DMatrix::from_fn(d, d, |m, n| {
        let mut hx = Complex64::new(0.0, 0.0);
        if m > 0 {
            hx += cl * sq[m] * x[(m - 1, n)];
        }
        if m + 1 < d {
            hx += clc * sq[m + 1] * x[(m + 1, n)];
        }
        let mut xh = Complex64::new(0.0, 0.0);
        if n + 1 < d {
            xh += cr * sq[n + 1] * x[(m, n + 1)];
        }
        if n > 0 {
            xh += crc * sq[n] * x[(m, n - 1)];
        }
        let mut out = minus_i * (hx - xh);
        if kappa != 0.0 {
            if m + 1 < d && n + 1 < d {
                out += x[(m + 1, n + 1)] * (kappa * sq[m + 1] * sq[n + 1]);
            }
            out -= x[(m, n)] * (0.5 * kappa * (m + n) as f64);
        }
        out
    })
}

/// Oracle output: states on the grid, in the frame of the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<QubitCavityState>,
    pub kappa: f64,
}

impl OracleTrajectory {
    /// Qubit-conditioned ⟨a⟩ for both branches.
    pub fn conditional_means(&self) -> CavityTrajectory {
        let alpha_e = self.states.iter().map(|s| s.conditional_field(0)).collect();
        let alpha_g = self.states.iter().map(|s| s.conditional_field(1)).collect();
        CavityTrajectory {
            times: self.times.clone(),
            alpha_e,
            alpha_g,
            kappa: self.kappa,
        }
    }

    pub fn sigma_z(&self) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| (s.block(0, 0).trace() - s.block(1, 1).trace()).re)
            .collect()
    }

    /// max_t |⟨σ^z⟩(t) − ⟨σ^z⟩(0)|.
    pub fn sigma_z_drift(&self) -> f64 {
        let sz = self.sigma_z();
        let first = sz.first().copied().unwrap_or(0.0);
        sz.iter().fold(0.0, |m, v| m.max((v - first).abs()))
    }

    pub fn photon_number(&self) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| {
                let d = s.dim_fock();
                (0..d)
                    .map(|n| n as f64 * (s.rho()[(n, n)].re + s.rho()[(d + n, d + n)].re))
                    .sum()
            })
            .collect()
    }

    pub fn purity(&self) -> Vec<f64> {
        self.states.iter().map(QubitCavityState::purity).collect()
    }

    /// max_t |Tr ρ(t) − 1|.
    pub fn trace_error(&self) -> f64 {
        self.states
            .iter()
            .fold(0.0, |m, s| m.max((s.trace() - Complex64::new(1.0, 0.0)).norm()))
    }

    /// Cavity CSV columns plus ⟨n⟩ and purity.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let traj = self.conditional_means();
        let d = pointer_separation(&traj);
        let n = self.photon_number();
        let pur = self.purity();
        writeln!(w, "t,re_a_e,im_a_e,re_a_g,im_a_g,d,n_mean,purity")?;
        for i in 0..self.times.len() {
            let (e, g) = (traj.alpha_e[i], traj.alpha_g[i]);
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                self.times[i], e.re, e.im, g.re, g.im, d[i], n[i], pur[i]
            )?;
        }
        Ok(())
    }
}

fn top_population(b: &Blocks) -> f64 {
    let d = b.0[0].nrows();
    let lo = d.saturating_sub(2);
    (lo..d).map(|n| b.0[0][(n, n)].re + b.0[2][(n, n)].re).sum()
}

fn suggested_truncation(b: &Blocks, fock: usize) -> usize {
    let nbar = [0usize, 2]
        .iter()
        .map(|&i| {
            let x = &b.0[i];
            let p = x.trace().re.max(f64::MIN_POSITIVE);
            (field_of_block(x) / p).norm_sqr()
        })
        .fold(0.0, f64::max);
    let est = (nbar + 8.0 * nbar.sqrt() + 10.0).ceil() as usize;
    est.max(2 * fock)
}

/// Lindblad evolution under an explicit generator.
pub fn evolve_with(
    gen: &Generator,
    kappa: f64,
    rho0: &QubitCavityState,
    cfg: &EvolutionConfig,
    grid: &[f64],
) -> Result<OracleTrajectory> {
    check_grid(grid)?;
    if kappa < 0.0 {
        return Err(ReadoutError::Input("kappa must be non-negative".into()));
    }
    let d = cfg.fock_truncation + 1;
    if rho0.dim_fock() != d {
        return Err(ReadoutError::Dimension {
            expected: d,
            got: rho0.dim_fock(),
        });
    }
    rho0.validate()?;
    gen.gz().check_time(*grid.last().unwrap())?;
    let f_max = gen.max_frequency();
    if let Some(dt) = cfg.dt {
        if f_max > 0.0 && dt >= 2.0 * PI / (50.0 * f_max) {
            return Err(ReadoutError::Input(format!(
                "dt = {dt:e} too coarse for frequency {f_max:e} rad/s"
            )));
        }
    }
    let dt = cfg.dt.unwrap_or_else(|| gen.default_dt());

    let sq: Vec<f64> = (0..d).map(|n| (n as f64).sqrt()).collect();
    let rhs = |t: f64, y: &Blocks| {
        let c = gen.coupling(t);
        Blocks([
            block_rhs(&y.0[0], c, c, kappa, &sq),
            block_rhs(&y.0[1], c, -c, kappa, &sq),
            block_rhs(&y.0[2], -c, -c, kappa, &sq),
        ])
    };
    let y0 = Blocks([rho0.block(0, 0), rho0.block(0, 1), rho0.block(1, 1)]);
    let guard = |_: f64, y: &Blocks| {
        let pop = top_population(y);
        if pop > TRUNCATION_GUARD {
            return Err(ReadoutError::Truncation {
                fock: cfg.fock_truncation,
                population: pop,
                suggested: suggested_truncation(y, cfg.fock_truncation),
            });
        }
        Ok(())
    };
    let blocks = match cfg.method {
        Method::Rk4 => integrate_rk4(rhs, y0, 0.0, grid, dt, guard)?,
        Method::Rk45 { rtol, atol } => {
            let opts = AdaptiveOptions {
                rtol,
                atol,
                h_init: dt,
                h_max: if f_max > 0.0 { 2.0 * PI / (20.0 * f_max) } else { grid[grid.len() - 1].max(dt) },
                max_steps: 10_000_000,
            };
            integrate_rk45(rhs, y0, 0.0, grid, opts, guard)?
        }
    };

    let states = grid
        .iter()
        .zip(blocks)
        .map(|(&t, b)| assemble(gen, t, b, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleTrajectory {
        times: grid.to_vec(),
        states,
        kappa,
    })
}

/// Undoes the interaction picture and builds the dense state.
fn assemble(gen: &Generator, t: f64, b: Blocks, d: usize) -> Result<QubitCavityState> {
    let phi = gen.cavity_phase(t);
    let rot: Vec<Complex64> = (0..d).map(|n| Complex64::from_polar(1.0, -phi * n as f64)).collect();
    let qubit = Complex64::from_polar(1.0, -2.0 * gen.qubit_phase(t));
    let [ee, eg, gg] = b.0;
    let mut rho = DMatrix::zeros(2 * d, 2 * d);
    for m in 0..d {
        for n in 0..d {
            let u = rot[m] * rot[n].conj();
            rho[(m, n)] = ee[(m, n)] * u;
            rho[(d + m, d + n)] = gg[(m, n)] * u;
            let c = eg[(m, n)] * u * qubit;
            rho[(m, d + n)] = c;
            rho[(d + n, m)] = c.conj();
        }
    }
    QubitCavityState::new(d, rho)
}

/// Evolves `rho0` under the Hamiltonian of `cfg.frame` with coupling `gz`.
pub fn evolve_master(
    p: &SystemParams,
    gz: &Modulation,
    rho0: &QubitCavityState,
    cfg: &EvolutionConfig,
    grid: &[f64],
) -> Result<OracleTrajectory> {
    evolve_with(&Generator::for_frame(p, gz, cfg.frame), p.kappa, rho0, cfg, grid)
}

/// Evolves under the Floquet Hamiltonian alone.
pub fn evolve_floquet(
    p: &SystemParams,
    gz: &Modulation,
    spec: FloquetSpec,
    rho0: &QubitCavityState,
    cfg: &EvolutionConfig,
    grid: &[f64],
) -> Result<OracleTrajectory> {
    let gen = Generator::floquet(gz, p.omega_r, spec)?;
    evolve_with(&gen, p.kappa, rho0, cfg, grid)
}

/// max_t |a_oracle − a_ref| / max_t |a_ref| over both branches.
pub fn relative_deviation(oracle: &CavityTrajectory, reference: &CavityTrajectory) -> Result<f64> {
    if oracle.times.len() != reference.times.len() {
        return Err(ReadoutError::Alignment(format!(
            "{} oracle points vs {} reference points",
            oracle.times.len(),
            reference.times.len()
        )));
    }
    let mut worst: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for i in 0..oracle.times.len() {
        worst = worst
            .max((oracle.alpha_e[i] - reference.alpha_e[i]).norm())
            .max((oracle.alpha_g[i] - reference.alpha_g[i]).norm());
        peak = peak.max(reference.alpha_e[i].norm()).max(reference.alpha_g[i].norm());
    }
    Ok(if peak > 0.0 { worst / peak } else { worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::linspace;
    use approx::assert_relative_eq;

    fn small_params() -> SystemParams {
        SystemParams::new(1.0, 50.0, 0.8, 0.6, 2.0).unwrap()
    }

    #[test]
    fn hamiltonian_structure() {
        let p = small_params();
        let zero = Modulation::constant(0.0, p.t_f).unwrap();
        let h = build_hamiltonian(&p, &zero, Frame::Rotating, 0.3, 6);
        assert!(h.iter().all(|z| z.norm() == 0.0));
        let m = Modulation::trigonometric(vec![1.0, -0.3], p.t_f).unwrap();
        let (sz, _, _) = full_operators(7);
        for frame in [Frame::Rotating, Frame::Lab] {
            for &t in &[0.0, 0.7, 1.9] {
                let h = build_hamiltonian(&p, &m, frame, t, 6);
                assert!((&h - h.adjoint()).iter().all(|z| z.norm() < 1e-14));
                let comm = &sz * &h - &h * &sz;
                assert!(comm.iter().all(|z| z.norm() < 1e-14));
            }
        }
    }

    #[test]
    fn structured_rhs_matches_dense_commutator() {
        let p = small_params();
        let m = Modulation::trigonometric(vec![1.0, -0.3], p.t_f).unwrap();
        let d = 6;
        let t = 0.37;
        let h = build_hamiltonian(&p, &m, Frame::Rotating, t, d - 1);
        let (_, a, n) = full_operators(d);
        // random-ish Hermitian state
        let mut x = DMatrix::from_fn(2 * d, 2 * d, |i, j| Complex64::new((i * 7 + j * 3) as f64 % 5.0, (i as f64 - j as f64) * 0.1));
        x = &x + x.adjoint();
        let half = Complex64::new(0.5, 0.0);
        let k = Complex64::new(p.kappa, 0.0);
        let dense = (&h * &x - &x * &h) * Complex64::new(0.0, -1.0)
            + (&a * &x * a.adjoint() - (&n * &x + &x * &n) * half) * k;
        let sq: Vec<f64> = (0..d).map(|i| (i as f64).sqrt()).collect();
        let c = Complex64::new(m.value(t), 0.0);
        let blk = |q: usize, r: usize| x.view((q * d, r * d), (d, d)).into_owned();
        let ee = block_rhs(&blk(0, 0), c, c, p.kappa, &sq);
        let eg = block_rhs(&blk(0, 1), c, -c, p.kappa, &sq);
        let gg = block_rhs(&blk(1, 1), -c, -c, p.kappa, &sq);
        let db = |q: usize, r: usize| dense.view((q * d, r * d), (d, d)).into_owned();
        assert!((ee - db(0, 0)).iter().all(|z| z.norm() < 1e-12));
        assert!((eg - db(0, 1)).iter().all(|z| z.norm() < 1e-12));
        assert!((gg - db(1, 1)).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn free_evolution_is_static() {
        let p = small_params().with_kappa(0.0);
        let zero = Modulation::constant(0.0, p.t_f).unwrap();
        let rho0 = QubitCavityState::plus_vacuum(4).unwrap();
        let cfg = EvolutionConfig::rk4(4, Frame::Rotating);
        let out = evolve_master(&p, &zero, &rho0, &cfg, &linspace(0.0, p.t_f, 5)).unwrap();
        for s in &out.states {
            assert!((s.rho() - rho0.rho()).iter().all(|z| z.norm() < 1e-15));
        }
    }

    #[test]
    fn constant_drive_closed_form() {
        let p = small_params();
        let g = 0.6;
        let m = Modulation::constant(g, p.t_f).unwrap();
        let rho0 = QubitCavityState::plus_vacuum(12).unwrap();
        let cfg = EvolutionConfig::rk4(12, Frame::Rotating);
        let grid = linspace(0.0, p.t_f, 21);
        let out = evolve_master(&p, &m, &rho0, &cfg, &grid).unwrap();
        let means = out.conditional_means();
        for (i, &t) in grid.iter().enumerate() {
            let expect = 2.0 * g / p.kappa * (1.0 - (-p.kappa * t / 2.0).exp());
            assert!((means.alpha_e[i] - Complex64::new(0.0, -expect)).norm() < 1e-9);
            assert!((means.alpha_g[i] - Complex64::new(0.0, expect)).norm() < 1e-9);
        }
        assert!(out.sigma_z_drift() < 1e-12);
        assert!(out.trace_error() < 1e-12);
        for s in [&out.states[0], &out.states[20]] {
            s.validate().unwrap();
        }
    }

    #[test]
    fn lab_frame_matches_dense_reference() {
        let p = small_params();
        let m = Modulation::trigonometric(vec![0.5, 0.2], p.t_f).unwrap();
        let rho0 = QubitCavityState::plus_vacuum(10).unwrap();
        let grid = linspace(0.0, p.t_f, 11);
        // dense lab-frame reference by direct RK4 on the full matrix
        let d = 11;
        let (_, a, n) = full_operators(d);
        let half = Complex64::new(0.5, 0.0);
        let k = Complex64::new(p.kappa, 0.0);
        let f = |t: f64, x: &DMatrix<Complex64>| {
            let h = build_hamiltonian(&p, &m, Frame::Lab, t, d - 1);
            (&h * x - x * &h) * Complex64::new(0.0, -1.0) + (&a * x * a.adjoint() - (&n * x + x * &n) * half) * k
        };
        let dense = integrate_rk4(f, rho0.rho().clone(), 0.0, &grid, 2e-4, |_, _| Ok(())).unwrap();
        let lab = evolve_master(&p, &m, &rho0, &EvolutionConfig::rk4(10, Frame::Lab), &grid).unwrap();
        for (s, r) in lab.states.iter().zip(&dense) {
            assert!((s.rho() - r).iter().all(|z| z.norm() < 1e-8));
        }
        assert!(lab.sigma_z_drift() < 1e-12);
    }

    #[test]
    fn truncation_guard_trips() {
        let p = small_params();
        let m = Modulation::constant(20.0, p.t_f).unwrap();
        let rho0 = QubitCavityState::excited_vacuum(5).unwrap();
        let err = evolve_master(&p, &m, &rho0, &EvolutionConfig::rk4(5, Frame::Rotating), &linspace(0.0, p.t_f, 5))
            .unwrap_err();
        match err {
            ReadoutError::Truncation { fock, suggested, .. } => {
                assert_eq!(fock, 5);
                assert!(suggested >= 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn coarse_dt_rejected() {
        let p = small_params();
        let m = Modulation::constant(0.1, p.t_f).unwrap();
        let rho0 = QubitCavityState::plus_vacuum(3).unwrap();
        let mut cfg = EvolutionConfig::rk4(3, Frame::Lab);
        cfg.dt = Some(0.1);
        assert!(evolve_master(&p, &m, &rho0, &cfg, &[0.0, 1.0]).is_err());
        cfg.fock_truncation = 4;
        cfg.dt = None;
        assert!(matches!(
            evolve_master(&p, &m, &rho0, &cfg, &[0.0, 1.0]),
            Err(ReadoutError::Dimension { .. })
        ));
    }

    #[test]
    fn rk45_agrees_with_rk4() {
        let p = small_params();
        let m = Modulation::trigonometric(vec![0.5, 0.2], p.t_f).unwrap();
        let rho0 = QubitCavityState::plus_vacuum(8).unwrap();
        let grid = linspace(0.0, p.t_f, 5);
        let a = evolve_master(&p, &m, &rho0, &EvolutionConfig::rk4(8, Frame::Rotating), &grid).unwrap();
        let cfg = EvolutionConfig {
            dt: Some(1e-3),
            method: Method::Rk45 { rtol: 1e-11, atol: 1e-13 },
            fock_truncation: 8,
            frame: Frame::Rotating,
        };
        let b = evolve_master(&p, &m, &rho0, &cfg, &grid).unwrap();
        let dev = relative_deviation(&b.conditional_means(), &a.conditional_means()).unwrap();
        assert!(dev < 1e-9, "{dev}");
    }

    #[test]
    fn csv_header() {
        let p = small_params();
        let m = Modulation::constant(0.1, p.t_f).unwrap();
        let rho0 = QubitCavityState::plus_vacuum(10).unwrap();
        let out = evolve_master(&p, &m, &rho0, &EvolutionConfig::rk4(10, Frame::Rotating), &[0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        out.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,re_a_e,im_a_e,re_a_g,im_a_g,d,n_mean,purity\n"));
        assert_relative_eq!(out.purity()[0], 1.0, epsilon = 1e-14);
    }
}
