//! Figures of merit for a reconstructed density matrix.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::special::binary_entropy;
use crate::state::{c, CMatrix, CVector};

/// <psi|rho|psi> for a normalized pure target.
pub fn fidelity(rho: &CMatrix, target: &CVector) -> Result<f64> {
    if target.len() != rho.nrows() {
        return Err(Error::DimensionMismatch { expected: rho.nrows(), found: target.len() });
    }
    Ok(target.dotc(&(rho * target)).re)
}

/// Tr(rho^2).
pub fn purity(rho: &CMatrix) -> f64 {
    (rho * rho).trace().re
}

fn spin_flip(rho: &CMatrix) -> CMatrix {
    // sigma_y (x) sigma_y is real: anti-diagonal with signs (-1, 1, 1, -1)
    let mut yy = CMatrix::zeros(4, 4);
    for (k, s) in [-1.0, 1.0, 1.0, -1.0].into_iter().enumerate() {
        yy[(k, 3 - k)] = c(s, 0.0);
    }
    &yy * rho.conjugate() * &yy
}

fn hermitian_eigen(m: &CMatrix) -> Result<SymmetricEigen<num_complex::Complex64, nalgebra::Dyn>> {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(h.clone());
    let vecs = &eig.eigenvectors;
    let lam = CMatrix::from_diagonal(&eig.eigenvalues.map(|x| c(x, 0.0)));
    let resid = (&h * vecs - vecs * lam).norm();
    if resid > 1e-8 * h.norm().max(1.0) {
        return Err(Error::NumericalFailure(format!("eigensolve residual {resid:.3e}")));
    }
    Ok(eig)
}

/// Wootters concurrence of a two-qubit state.
pub fn concurrence(rho: &CMatrix) -> Result<f64> {
    if rho.nrows() != 4 || rho.ncols() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.nrows() });
    }
    // eigenvalues of rho rho~ equal those of sqrt(rho) rho~ sqrt(rho), which is Hermitian
    let e = hermitian_eigen(rho)?;
    let sqrt_vals = e.eigenvalues.map(|x| c(x.max(0.0).sqrt(), 0.0));
    let sqrt_rho = &e.eigenvectors * CMatrix::from_diagonal(&sqrt_vals) * e.eigenvectors.adjoint();
    let r = &sqrt_rho * spin_flip(rho) * &sqrt_rho;
    let mut lam: Vec<f64> = hermitian_eigen(&r)?.eigenvalues.iter().map(|x| x.max(0.0).sqrt()).collect();
    lam.sort_by(|a, b| b.total_cmp(a));
    Ok((lam[0] - lam[1] - lam[2] - lam[3]).max(0.0))
}

/// Entanglement of formation h((1 + sqrt(1 - C^2)) / 2).
pub fn entanglement_of_formation(rho: &CMatrix) -> Result<f64> {
    let conc = concurrence(rho)?.min(1.0);
    Ok(binary_entropy(0.5 * (1.0 + (1.0 - conc * conc).sqrt())))
}
