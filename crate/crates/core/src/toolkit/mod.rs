//! Density matrices, a small zoo of reference states, the text file format
//! and the command-line front end.

pub mod cli;
pub mod io;
pub mod states;

pub use cli::run_cli;
pub use io::{parse_state, serialize_state};
pub use states::*;

use crate::matcore::{hermitian_defect, hermitian_eig, ComplexMatrix, ComplexVector, Tolerances};
use crate::{Error, Result};

/// A validated state on an `m × n` bipartite space.
///
/// Basis order is `idx(a, b) = (a − 1)·n + b`: the `m`-dimensional factor is
/// the slow index.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: usize,
    n: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(m: usize, n: usize, matrix: ComplexMatrix) -> Result<Self> {
        Self::new_with(m, n, matrix, &Tolerances::default())
    }

    /// Checks shape, Hermiticity, unit trace and positivity.
    pub fn new_with(m: usize, n: usize, matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        if m < 2 || n < 2 {
            return Err(Error::domain(format!(
                "subsystem dimensions must both be at least 2, got {m}x{n}"
            )));
        }
        if matrix.shape() != (m * n, m * n) {
            return Err(Error::domain(format!(
                "a {m}x{n} state needs a {d}x{d} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                d = m * n
            )));
        }
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::domain("matrix has non-finite entries"));
        }
        let defect = hermitian_defect(&matrix);
        if defect > tol.hermitian {
            return Err(Error::domain(format!(
                "matrix is not Hermitian (relative defect {defect:e})"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > tol.trace || trace.im.abs() > tol.trace {
            return Err(Error::domain(format!("trace is {trace}, expected 1")));
        }
        let min = hermitian_eig(&matrix)?
            .eigenvalues
            .last()
            .copied()
            .unwrap_or(0.0);
        if min < -tol.psd {
            return Err(Error::domain(format!(
                "matrix is not positive semidefinite (eigenvalue {min:e})"
            )));
        }
        Ok(DensityMatrix { m, n, matrix })
    }

    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
    pub fn from_pure(m: usize, n: usize, psi: &ComplexVector) -> Result<Self> {
        let nrm = psi.norm_squared();
        if nrm == 0.0 {
            return Err(Error::domain("cannot build a state from the zero vector"));
        }
        Self::new(m, n, (psi * psi.adjoint()).unscale(nrm))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m * self.n
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}
