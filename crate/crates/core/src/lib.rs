//! Separability of bipartite mixed states.
//!
//! A state on an `m × n` system is tested pair by pair: each of the
//! `(m-1)(n-1)` parallel pairs of the coefficient matrix gets a symmetric
//! operator `B^r`, the eigen-ensemble of `ρ` is contracted against it into a
//! complex symmetric matrix `τ^r`, and the Takagi values of `τ^r` decide whether
//! some ensemble of `ρ` makes that pair parallel in every member.  When all
//! pairs pass, a search over orthonormal-column transformations looks for a
//! single ensemble that satisfies every pair at once, which is a separable
//! decomposition.
//!
//! Modules, bottom up:
//!
//! - [`matcore`]: dense complex kernels (Hermitian eigensolver, Takagi, SVD,
//!   orthonormal columns).
//! - [`pairgen`]: pair enumeration and the sparse pair operators.
//! - [`criterion`]: scaled eigenvectors, `τ^r`, spectra, partial transpose and
//!   the classification pipeline.
//! - [`decomposer`]: explicit single-pair ensembles.
//! - [`search`]: joint residual minimisation and certificate extraction.
//! - [`toolkit`]: density matrices, the state zoo, file I/O and the CLI.

pub mod criterion;
pub mod decomposer;
pub mod error;
pub mod matcore;
pub mod pairgen;
pub mod search;
pub mod toolkit;

pub use error::{Error, Result};
pub use matcore::{ComplexMatrix, ComplexVector, Tolerances};
pub use num_complex::Complex64 as C64;
pub use toolkit::DensityMatrix;
