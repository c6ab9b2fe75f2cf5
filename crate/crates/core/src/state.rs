//! Two-photon states over the discrete frequency-bin basis.
//!
//! Joint basis index is `s * dim_idler + i` for signal bin `s` and idler bin `i`,
//! so for qubits the order is |00>, |01>, |10>, |11>.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// |v><v|
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Pure(CVector),
    Mixed(CMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinState {
    dim_signal: usize,
    dim_idler: usize,
    repr: Repr,
}

impl BinState {
    /// Pure state from amplitudes that must already be normalized within 1e-12.
    pub fn pure(dim_signal: usize, dim_idler: usize, amplitudes: CVector) -> Result<Self> {
        check_dims(dim_signal, dim_idler, amplitudes.len())?;
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Self { dim_signal, dim_idler, repr: Repr::Pure(amplitudes) })
    }

    pub fn pure_normalized(dim_signal: usize, dim_idler: usize, amplitudes: CVector) -> Result<Self> {
        check_dims(dim_signal, dim_idler, amplitudes.len())?;
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite amplitude vector".into()));
        }
        Ok(Self { dim_signal, dim_idler, repr: Repr::Pure(amplitudes / Complex64::from(norm)) })
    }

    pub fn mixed(dim_signal: usize, dim_idler: usize, rho: CMatrix) -> Result<Self> {
        check_dims(dim_signal, dim_idler, rho.nrows())?;
        if rho.nrows() != rho.ncols() {
            return Err(Error::InvalidState("density matrix is not square".into()));
        }
        let herm_err = (&rho - rho.adjoint()).camax();
        if herm_err > 1e-10 {
            return Err(Error::InvalidState(format!("not Hermitian (max deviation {herm_err:.2e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min_eig = SymmetricEigen::new(rho.clone()).eigenvalues.min();
        if min_eig < -1e-10 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(Self { dim_signal, dim_idler, repr: Repr::Mixed(rho) })
    }

    pub fn basis(dim_signal: usize, dim_idler: usize, signal: usize, idler: usize) -> Self {
        assert!(signal < dim_signal && idler < dim_idler, "basis label out of range");
        let mut v = CVector::zeros(dim_signal * dim_idler);
        v[signal * dim_idler + idler] = c(1.0, 0.0);
        Self { dim_signal, dim_idler, repr: Repr::Pure(v) }
    }

    pub fn bell(kind: Bell) -> Self {
        let h = FRAC_1_SQRT_2;
        let v = match kind {
            Bell::PhiPlus => [h, 0.0, 0.0, h],
            Bell::PhiMinus => [h, 0.0, 0.0, -h],
            Bell::PsiPlus => [0.0, h, h, 0.0],
            Bell::PsiMinus => [0.0, h, -h, 0.0],
        };
        let v = CVector::from_iterator(4, v.iter().map(|&x| c(x, 0.0)));
        Self { dim_signal: 2, dim_idler: 2, repr: Repr::Pure(v) }
    }

    /// p |bell><bell| + (1 - p) I/4
    pub fn werner(p: f64, kind: Bell) -> Self {
        Self::bell(kind).depolarize(p)
    }

    /// p rho + (1 - p) I/d
    pub fn depolarize(&self, p: f64) -> Self {
        let d = self.dim();
        let noise = CMatrix::identity(d, d) * c((1.0 - p) / d as f64, 0.0);
        let rho = self.density() * c(p, 0.0) + noise;
        Self { dim_signal: self.dim_signal, dim_idler: self.dim_idler, repr: Repr::Mixed(rho) }
    }

    /// weight * self + (1 - weight) * other
    pub fn mix(&self, other: &BinState, weight: f64) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let rho = self.density() * c(weight, 0.0) + other.density() * c(1.0 - weight, 0.0);
        Ok(Self { dim_signal: self.dim_signal, dim_idler: self.dim_idler, repr: Repr::Mixed(rho) })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_signal, self.dim_idler)
    }

    pub fn dim(&self) -> usize {
        self.dim_signal * self.dim_idler
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&CVector> {
        match &self.repr {
            Repr::Pure(v) => Some(v),
            Repr::Mixed(_) => None,
        }
    }

    pub fn density(&self) -> CMatrix {
        match &self.repr {
            Repr::Pure(v) => outer(v),
            Repr::Mixed(m) => m.clone(),
        }
    }

    /// <v|rho|v> for a joint vector `v` (not necessarily normalized).
    pub fn probability(&self, v: &CVector) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        let p = match &self.repr {
            Repr::Pure(a) => v.dotc(a).norm_sqr(),
            Repr::Mixed(m) => v.dotc(&(m * v)).re,
        };
        Ok(p.max(0.0))
    }

    /// Apply the same single-photon unitary-like map to both arms.
    pub fn transform(&self, signal: &CMatrix, idler: &CMatrix) -> Result<Self> {
        if signal.nrows() != self.dim_signal || idler.nrows() != self.dim_idler {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: signal.nrows() * idler.nrows() });
        }
        let u = signal.kronecker(idler);
        let repr = match &self.repr {
            Repr::Pure(v) => Repr::Pure(&u * v),
            Repr::Mixed(m) => Repr::Mixed(&u * m * u.adjoint()),
        };
        Ok(Self { dim_signal: self.dim_signal, dim_idler: self.dim_idler, repr })
    }
}

fn check_dims(dim_signal: usize, dim_idler: usize, len: usize) -> Result<()> {
    if dim_signal < 2 || dim_idler < 2 {
        return Err(Error::InvalidState("each photon needs at least two bins".into()));
    }
    if dim_signal * dim_idler != len {
        return Err(Error::DimensionMismatch { expected: dim_signal * dim_idler, found: len });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bell {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

/// The eight two-qubit states the qubit device is programmed to emit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedState {
    Basis(usize, usize),
    Bell(Bell),
}

impl NamedState {
    pub const ALL: [NamedState; 8] = [
        NamedState::Basis(0, 0),
        NamedState::Basis(1, 1),
        NamedState::Basis(0, 1),
        NamedState::Basis(1, 0),
        NamedState::Bell(Bell::PhiPlus),
        NamedState::Bell(Bell::PhiMinus),
        NamedState::Bell(Bell::PsiPlus),
        NamedState::Bell(Bell::PsiMinus),
    ];

    pub fn state(self) -> BinState {
        match self {
            NamedState::Basis(s, i) => BinState::basis(2, 2, s, i),
            NamedState::Bell(b) => BinState::bell(b),
        }
    }

    pub fn is_entangled(self) -> bool {
        matches!(self, NamedState::Bell(_))
    }
}

impl fmt::Display for NamedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedState::Basis(s, i) => write!(f, "{s}{i}"),
            NamedState::Bell(Bell::PhiPlus) => f.write_str("phi+"),
            NamedState::Bell(Bell::PhiMinus) => f.write_str("phi-"),
            NamedState::Bell(Bell::PsiPlus) => f.write_str("psi+"),
            NamedState::Bell(Bell::PsiMinus) => f.write_str("psi-"),
        }
    }
}

impl FromStr for NamedState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "00" => NamedState::Basis(0, 0),
            "01" => NamedState::Basis(0, 1),
            "10" => NamedState::Basis(1, 0),
            "11" => NamedState::Basis(1, 1),
            "phi+" | "phi_plus" => NamedState::Bell(Bell::PhiPlus),
            "phi-" | "phi_minus" => NamedState::Bell(Bell::PhiMinus),
            "psi+" | "psi_plus" => NamedState::Bell(Bell::PsiPlus),
            "psi-" | "psi_minus" => NamedState::Bell(Bell::PsiMinus),
            other => return Err(Error::InvalidParameter(format!("unknown state name `{other}`"))),
        })
    }
}
