use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{ReadoutError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Density matrix on qubit ⊗ Fock(0..=N).
///
/// Basis index `q·(N+1) + n`, with q = 0 the excited state (σ^z = +1) and
/// q = 1 the ground state.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitCavityState {
    dim_fock: usize,
    rho: DMatrix<Complex64>,
}

impl QubitCavityState {
    pub fn new(dim_fock: usize, rho: DMatrix<Complex64>) -> Result<Self> {
        let n = 2 * dim_fock;
        if rho.nrows() != n || rho.ncols() != n {
            return Err(ReadoutError::Dimension {
                expected: n,
                got: rho.nrows(),
            });
        }
        Ok(QubitCavityState { dim_fock, rho })
    }

    /// `qubit ⊗ |0⟩⟨0|` for a 2×2 qubit density matrix in (e, g) order.
    pub fn with_vacuum(qubit: [[Complex64; 2]; 2], fock_truncation: usize) -> Result<Self> {
        if fock_truncation == 0 {
            return Err(ReadoutError::Input("Fock truncation must be at least 1".into()));
        }
        let d = fock_truncation + 1;
        let mut rho = DMatrix::zeros(2 * d, 2 * d);
        for (q, row) in qubit.iter().enumerate() {
            for (r, &v) in row.iter().enumerate() {
                rho[(q * d, r * d)] = v;
            }
        }
        Ok(QubitCavityState { dim_fock: d, rho })
    }

    /// (|e⟩ + |g⟩)/√2 ⊗ |0⟩.
    pub fn plus_vacuum(fock_truncation: usize) -> Result<Self> {
        let h = Complex64::new(0.5, 0.0);
        Self::with_vacuum([[h, h], [h, h]], fock_truncation)
    }

    pub fn excited_vacuum(fock_truncation: usize) -> Result<Self> {
        Self::with_vacuum([[ONE, ZERO], [ZERO, ZERO]], fock_truncation)
    }

    pub fn ground_vacuum(fock_truncation: usize) -> Result<Self> {
        Self::with_vacuum([[ZERO, ZERO], [ZERO, ONE]], fock_truncation)
    }

    /// N + 1.
    pub fn dim_fock(&self) -> usize {
        self.dim_fock
    }

    pub fn rho(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn into_rho(self) -> DMatrix<Complex64> {
        self.rho
    }

    /// Cavity block ⟨q|ρ|r⟩ for q, r ∈ {0 = e, 1 = g}.
    pub fn block(&self, q: usize, r: usize) -> DMatrix<Complex64> {
        let d = self.dim_fock;
        self.rho.view((q * d, r * d), (d, d)).into_owned()
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Hermitian to 1e-12, unit trace to 1e-10, eigenvalues ≥ −1e-10.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > 1e-12 {
            return Err(ReadoutError::Input(format!("state not Hermitian (error {herm:e})")));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(ReadoutError::Input(format!("state trace {tr} differs from 1")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-10 {
            return Err(ReadoutError::Input(format!("state has negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Tr(a ρ_qq)/Tr(ρ_qq), the cavity field conditioned on qubit level q.
    pub fn conditional_field(&self, q: usize) -> Complex64 {
        let x = self.block(q, q);
        let p = x.trace();
        if p.norm() == 0.0 {
            return ZERO;
        }
        field_of_block(&x) / p
    }
}

/// Tr(a X) = Σ_m √(m+1) X_{m+1,m}.
pub(crate) fn field_of_block(x: &DMatrix<Complex64>) -> Complex64 {
    (0..x.nrows().saturating_sub(1))
        .map(|m| x[(m + 1, m)] * ((m + 1) as f64).sqrt())
        .sum()
}

/// Cavity annihilation operator on Fock(0..d−1).
pub fn annihilation(d: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// A ⊗ B with A on the qubit.
pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

pub fn sigma_z() -> DMatrix<Complex64> {
    DMatrix::from_diagonal(&DVector::from_vec(vec![ONE, -ONE]))
}

/// Full-space operators σ^z ⊗ I, I ⊗ a and I ⊗ a†a for truncation N = d − 1.
pub fn full_operators(d: usize) -> (DMatrix<Complex64>, DMatrix<Complex64>, DMatrix<Complex64>) {
    let a = annihilation(d);
    let n = a.adjoint() * &a;
    let i2 = DMatrix::<Complex64>::identity(2, 2);
    let id = DMatrix::<Complex64>::identity(d, d);
    (kron(&sigma_z(), &id), kron(&i2, &a), kron(&i2, &n))
}

/// Tr(op·ρ).
pub fn expectation(op: &DMatrix<Complex64>, state: &QubitCavityState) -> Result<Complex64> {
    let rho = state.rho();
    if op.nrows() != rho.nrows() || op.ncols() != rho.ncols() {
        return Err(ReadoutError::Dimension {
            expected: rho.nrows(),
            got: op.nrows(),
        });
    }
    // Tr(AB) = Σ_ij A_ij B_ji
    let mut acc = ZERO;
    for i in 0..op.nrows() {
        for j in 0..op.ncols() {
            acc += op[(i, j)] * rho[(j, i)];
        }
    }
    Ok(acc)
}

/// exp(α a† − α* a)|0⟩ on the truncated space.
pub fn displaced_vacuum(alpha: Complex64, d: usize) -> DVector<Complex64> {
    let a = annihilation(d);
    let gen = a.adjoint() * alpha - &a * alpha.conj();
    let mut vac = DVector::zeros(d);
    vac[0] = ONE;
    gen.exp() * vac
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn basic_states() {
        let s = QubitCavityState::plus_vacuum(5).unwrap();
        s.validate().unwrap();
        assert_eq!(s.dim_fock(), 6);
        assert_relative_eq!(s.purity(), 1.0, epsilon = 1e-15);
        let (sz, a, _) = full_operators(6);
        assert_eq!(expectation(&sz, &s).unwrap(), ZERO);
        assert_eq!(expectation(&a, &s).unwrap(), ZERO);
        let id = DMatrix::<Complex64>::identity(12, 12);
        assert_eq!(expectation(&id, &s).unwrap(), ONE);
        let e = QubitCavityState::excited_vacuum(5).unwrap();
        assert_eq!(expectation(&sz, &e).unwrap(), ONE);
        assert!(expectation(&DMatrix::identity(3, 3), &s).is_err());
        assert!(QubitCavityState::new(5, DMatrix::zeros(4, 4)).is_err());
    }

    #[test]
    fn coherent_state_photon_number() {
        let d = 30;
        let alpha = Complex64::new(0.6, -0.8);
        let psi = displaced_vacuum(alpha, d);
        let mut rho = DMatrix::zeros(2 * d, 2 * d);
        let block = &psi * psi.adjoint();
        rho.view_mut((0, 0), (d, d)).copy_from(&block);
        let s = QubitCavityState::new(d, rho).unwrap();
        s.validate().unwrap();
        let (_, a, n) = full_operators(d);
        assert_relative_eq!(expectation(&n, &s).unwrap().re, alpha.norm_sqr(), epsilon = 1e-10);
        assert!((expectation(&a, &s).unwrap() - alpha).norm() < 1e-10);
        assert!((s.conditional_field(0) - alpha).norm() < 1e-10);
    }

    #[test]
    fn invalid_states_rejected() {
        let mut rho = DMatrix::zeros(4, 4);
        rho[(0, 0)] = Complex64::new(2.0, 0.0);
        rho[(1, 1)] = Complex64::new(-1.0, 0.0);
        let s = QubitCavityState::new(2, rho).unwrap();
        assert!(s.validate().is_err());
        let mut rho = DMatrix::zeros(4, 4);
        rho[(0, 0)] = ONE;
        rho[(0, 1)] = Complex64::new(0.0, 0.1);
        assert!(QubitCavityState::new(2, rho).unwrap().validate().is_err());
    }
}
