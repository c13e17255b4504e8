//! Transmon–SQUID–resonator circuit in the charge basis.
//!
//! Energies are angular frequencies (ħ = 1). SI units appear only in
//! [`gz_estimate`].

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{self, Write};

use crate::error::{ReadoutError, Result};
use crate::params::{two_pi, HBAR, REDUCED_FLUX_QUANTUM};

/// Quoted qubit frequency target (rad/s).
pub const QUOTED_OMEGA_Q: f64 = 2.0 * PI * 3.28e9;
/// Quoted coupling target (rad/s).
pub const QUOTED_GZ: f64 = 2.0 * PI * 2.57e9;
/// Quoted max(g_z)/ω_r.
pub const QUOTED_RATIO: f64 = 0.5793;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub e_j: f64,
    pub e_c: f64,
    pub e_sigma: f64,
    pub d_asym: f64,
    pub n_g: f64,
    pub phi_x: f64,
    pub varphi_x: f64,
    /// Resonator inductance (H).
    pub l_r: f64,
    pub omega_r: f64,
    pub n_cut: usize,
}

impl CircuitParams {
    /// E_J = 2π·20 GHz, E_C = E_J/67, E_Σ = 1.5 E_J, d = 0.02, n_g = 1/2,
    /// both fluxes π/4, ω_r L_r = 200 kΩ.
    pub fn standard() -> Self {
        let e_j = two_pi(20.0e9);
        let omega_r = two_pi(6.6e9);
        CircuitParams {
            e_j,
            e_c: e_j / 67.0,
            e_sigma: 1.5 * e_j,
            d_asym: 0.02,
            n_g: 0.5,
            phi_x: PI / 4.0,
            varphi_x: PI / 4.0,
            l_r: 2.0e5 / omega_r,
            omega_r,
            n_cut: 25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.e_j, self.e_c, self.e_sigma, self.d_asym, self.n_g, self.phi_x, self.varphi_x, self.l_r, self.omega_r];
        if !vals.iter().all(|v| v.is_finite()) {
            return Err(ReadoutError::Input("circuit parameters must be finite".into()));
        }
        if !(self.e_c > 0.0) {
            return Err(ReadoutError::Input("E_C must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.d_asym) {
            return Err(ReadoutError::Input(format!("d_asym = {} outside [0, 1)", self.d_asym)));
        }
        if self.n_cut < 10 {
            return Err(ReadoutError::Input(format!("n_cut = {} must be >= 10", self.n_cut)));
        }
        Ok(())
    }

    /// E_J̃ = E_J + E_JS(ϕ_x).
    pub fn e_j_tilde(&self) -> f64 {
        self.e_j + squid_energy(self.e_sigma, self.d_asym, self.varphi_x)
    }

    pub fn dim(&self) -> usize {
        2 * self.n_cut + 1
    }
}

/// Asymmetric SQUID: E_Σ cos ϕ √(1 + d² tan² ϕ), written as
/// E_Σ √(cos² ϕ + d² sin² ϕ) so that cos ϕ = 0 needs no limit.
pub fn squid_energy(e_sigma: f64, d_asym: f64, varphi_x: f64) -> f64 {
    let (s, c) = varphi_x.sin_cos();
    e_sigma * (c * c + d_asym * d_asym * s * s).sqrt()
}

/// H_T = E_C (n − n_g)² − E_J̃ cos θ on charge states n ∈ [−n_cut, n_cut].
pub fn transmon_matrix(cp: &CircuitParams) -> DMatrix<f64> {
    let dim = cp.dim();
    let ej = cp.e_j_tilde();
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            let n = i as f64 - cp.n_cut as f64;
            cp.e_c * (n - cp.n_g).powi(2)
        } else if i.abs_diff(j) == 1 {
            -0.5 * ej
        } else {
            0.0
        }
    })
}

/// cos θ = ½ Σ (|n⟩⟨n+1| + h.c.).
pub fn cos_theta(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| if i.abs_diff(j) == 1 { 0.5 } else { 0.0 })
}

/// Eigenvalues ascending and the matching eigenvector columns.
pub fn spectrum(cp: &CircuitParams) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(transmon_matrix(cp));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(eig.eigenvectors.nrows(), order.len());
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// cos θ projected on the two lowest eigenstates, α_k = ½ Tr[σ^k P cos θ P].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliProjection {
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub alpha_z: f64,
    pub alpha_i: f64,
    /// Set when E₂ − E₁ < 10⁻² (E₁ − E₀): the qubit subspace is not isolated.
    pub leakage_warning: bool,
}

pub fn pauli_projection(cp: &CircuitParams) -> Result<PauliProjection> {
    cp.validate()?;
    let (values, vecs) = spectrum(cp);
    let cos = cos_theta(cp.dim());
    // qubit basis (|e⟩, |g⟩) = (v₁, v₀)
    let e = vecs.column(1);
    let g = vecs.column(0);
    let m_ee = (e.transpose() * &cos * e)[0];
    let m_gg = (g.transpose() * &cos * g)[0];
    let m_eg = (e.transpose() * &cos * g)[0];
    let gap = values[1] - values[0];
    Ok(PauliProjection {
        alpha_x: m_eg,
        alpha_y: 0.0,
        alpha_z: 0.5 * (m_ee - m_gg),
        alpha_i: 0.5 * (m_ee + m_gg),
        leakage_warning: values[2] - values[1] < 1e-2 * gap,
    })
}

/// g_z = (ω_q / 2φ₀) √(ħ ω_r L_r / 2) in rad/s.
pub fn gz_estimate(omega_q: f64, omega_r: f64, l_r: f64) -> Result<f64> {
    if !(omega_q >= 0.0 && omega_r > 0.0 && l_r > 0.0) {
        return Err(ReadoutError::Input("gz_estimate needs omega_q >= 0 and positive omega_r, L_r".into()));
    }
    Ok(omega_q / (2.0 * REDUCED_FLUX_QUANTUM) * (HBAR * omega_r * l_r / 2.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedFrequencies {
    /// √(E_C² + d E_Σ²), energies in rad/s.
    pub omega_q_formula: f64,
    /// E₁ − E₀ of the full charge-basis Hamiltonian.
    pub omega_q_exact: f64,
    pub e_j_tilde: f64,
    pub discrepancy: f64,
}

pub fn derived_frequencies(cp: &CircuitParams) -> Result<DerivedFrequencies> {
    cp.validate()?;
    let formula = (cp.e_c * cp.e_c + cp.d_asym * cp.e_sigma * cp.e_sigma).sqrt();
    let (values, _) = spectrum(cp);
    let exact = values[1] - values[0];
    Ok(DerivedFrequencies {
        omega_q_formula: formula,
        omega_q_exact: exact,
        e_j_tilde: cp.e_j_tilde(),
        discrepancy: exact - formula,
    })
}

/// Computed quantities next to the quoted targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitReport {
    pub params: CircuitParams,
    pub omega_q_formula: f64,
    pub omega_q_exact: f64,
    pub omega_q_quoted: f64,
    pub omega_q_formula_deviation: f64,
    pub omega_q_exact_deviation: f64,
    /// g_z from [`gz_estimate`] at the quoted ω_q.
    pub gz_formula: f64,
    pub gz_quoted: f64,
    pub gz_deviation: f64,
    pub ratio_formula: f64,
    pub ratio_quoted: f64,
    /// Quoted g_z divided by ω_r.
    pub ratio_from_quoted_gz: f64,
    pub ratio_deviation: f64,
    pub pauli: PauliProjection,
}

impl CircuitReport {
    pub fn new(cp: &CircuitParams) -> Result<Self> {
        let f = derived_frequencies(cp)?;
        let gz = gz_estimate(QUOTED_OMEGA_Q, cp.omega_r, cp.l_r)?;
        let rel = |x: f64, target: f64| (x - target) / target;
        Ok(CircuitReport {
            params: *cp,
            omega_q_formula: f.omega_q_formula,
            omega_q_exact: f.omega_q_exact,
            omega_q_quoted: QUOTED_OMEGA_Q,
            omega_q_formula_deviation: rel(f.omega_q_formula, QUOTED_OMEGA_Q),
            omega_q_exact_deviation: rel(f.omega_q_exact, QUOTED_OMEGA_Q),
            gz_formula: gz,
            gz_quoted: QUOTED_GZ,
            gz_deviation: rel(gz, QUOTED_GZ),
            ratio_formula: gz / cp.omega_r,
            ratio_quoted: QUOTED_RATIO,
            ratio_from_quoted_gz: QUOTED_GZ / cp.omega_r,
            ratio_deviation: rel(gz / cp.omega_r, QUOTED_RATIO),
            pauli: pauli_projection(cp)?,
        })
    }
}

/// One flux point of a spectrum sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub e_j: f64,
    pub varphi_x: f64,
    /// Lowest levels relative to the ground state.
    pub levels: Vec<f64>,
    pub pauli: PauliProjection,
}

/// Spectrum and projections over `e_j_grid × varphi_grid`. The transmon
/// junction has no flux law here, so its E_J is swept directly.
pub fn spectrum_sweep(
    cp: &CircuitParams,
    e_j_grid: &[f64],
    varphi_grid: &[f64],
    n_levels: usize,
) -> Result<Vec<SpectrumPoint>> {
    cp.validate()?;
    if n_levels < 2 || n_levels > cp.dim() {
        return Err(ReadoutError::Input(format!("n_levels = {n_levels} outside [2, {}]", cp.dim())));
    }
    let points: Vec<(f64, f64)> = e_j_grid
        .iter()
        .flat_map(|&e| varphi_grid.iter().map(move |&v| (e, v)))
        .collect();
    points
        .par_iter()
        .map(|&(e_j, varphi_x)| {
            let c = CircuitParams { e_j, varphi_x, ..*cp };
            let (values, _) = spectrum(&c);
            Ok(SpectrumPoint {
                e_j,
                varphi_x,
                levels: values[..n_levels].iter().map(|v| v - values[0]).collect(),
                pauli: pauli_projection(&c)?,
            })
        })
        .collect()
}

pub fn write_spectrum_csv<W: Write>(points: &[SpectrumPoint], mut w: W) -> io::Result<()> {
    let n = points.first().map_or(0, |p| p.levels.len());
    write!(w, "e_j,varphi_x")?;
    for k in 0..n {
        write!(w, ",e{k}")?;
    }
    writeln!(w, ",alpha_x,alpha_y,alpha_z,alpha_i")?;
    for p in points {
        write!(w, "{:e},{:e}", p.e_j, p.varphi_x)?;
        for v in &p.levels {
            write!(w, ",{v:e}")?;
        }
        writeln!(w, ",{:e},{:e},{:e},{:e}", p.pauli.alpha_x, p.pauli.alpha_y, p.pauli.alpha_z, p.pauli.alpha_i)?;
    }
    Ok(())
}

/// Largest finite-difference slope of the low levels along ϕ_x, against the
/// bound |dE_k/dϕ| ≤ max|dE_JS/dϕ| ≤ E_Σ (Hellmann–Feynman with ‖cos θ‖ ≤ 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub max_gradient: f64,
    pub bound: f64,
    pub passed: bool,
}

pub fn flatness(cp: &CircuitParams, varphi_grid: &[f64], n_levels: usize) -> Result<FlatnessReport> {
    if varphi_grid.len() < 2 || varphi_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ReadoutError::Input("flux grid must have >= 2 increasing points".into()));
    }
    cp.validate()?;
    if n_levels < 1 || n_levels > cp.dim() {
        return Err(ReadoutError::Input(format!("n_levels = {n_levels} outside [1, {}]", cp.dim())));
    }
    let absolute: Vec<Vec<f64>> = varphi_grid
        .par_iter()
        .map(|&v| spectrum(&CircuitParams { varphi_x: v, ..*cp }).0[..n_levels].to_vec())
        .collect();
    let mut max_gradient: f64 = 0.0;
    for i in 1..absolute.len() {
        let h = varphi_grid[i] - varphi_grid[i - 1];
        for k in 0..n_levels {
            max_gradient = max_gradient.max((absolute[i][k] - absolute[i - 1][k]).abs() / h);
        }
    }
    let bound = cp.e_sigma;
    Ok(FlatnessReport {
        max_gradient,
        bound,
        passed: max_gradient <= bound * (1.0 + 1e-12),
    })
}
