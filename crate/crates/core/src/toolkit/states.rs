use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::DensityMatrix;
use crate::matcore::{gaussian_matrix, ComplexMatrix, ComplexVector};
use crate::{Error, Result};

fn real_vector(data: &[f64]) -> ComplexVector {
    ComplexVector::from_iterator(data.len(), data.iter().map(|&x| C64::new(x, 0.0)))
}

/// Reference 2×4 state: diagonal 1/8 plus the couplings (1,6), (2,7), (3,8)
/// at 1/8.  Its partial transpose has minimum eigenvalue 0 and it is
/// separable: averaging `(1, e^{−iψ})/√2 ⊗ (1, e^{iψ}, e^{2iψ}, e^{3iψ})/2`
/// over `ψ = 2πs/5`, `s = 0..4`, reproduces it exactly.
pub fn bound_2x4() -> DensityMatrix {
    let mut rho = ComplexMatrix::zeros(8, 8);
    for i in 0..8 {
        rho[(i, i)] = C64::new(0.125, 0.0);
    }
    for (a, b) in [(0, 5), (1, 6), (2, 7)] {
        rho[(a, b)] = C64::new(0.125, 0.0);
        rho[(b, a)] = C64::new(0.125, 0.0);
    }
    DensityMatrix::new(2, 4, rho).expect("bound_2x4 is a valid state")
}

/// A fixed eigen-ensemble of [`bound_2x4`]: `e4`, `e5` (weight 1/8) and
/// `e1+e6`, `e2+e7`, `e3+e8` (weight 1/4), each scaled by `√(1/8)`.
pub fn bound_2x4_reference_basis() -> Vec<ComplexVector> {
    let c = 0.125f64.sqrt();
    let mut out = Vec::new();
    for support in [&[3usize][..], &[4], &[0, 5], &[1, 6], &[2, 7]] {
        let mut v = vec![0.0; 8];
        for &i in support {
            v[i] = c;
        }
        out.push(real_vector(&v));
    }
    out
}

/// `(|00⟩ + |11⟩)/√2`.
pub fn bell() -> DensityMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    DensityMatrix::from_pure(2, 2, &real_vector(&[h, 0.0, 0.0, h])).expect("valid")
}

/// `p·|Ψ⁻⟩⟨Ψ⁻| + (1 − p)·I/4` with `Ψ⁻ = (|01⟩ − |10⟩)/√2`.
pub fn werner_2x2(p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!(
            "Werner weight must lie in [0, 1], got {p}"
        )));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let singlet = real_vector(&[0.0, h, -h, 0.0]);
    let rho = (&singlet * singlet.adjoint()).scale(p)
        + ComplexMatrix::identity(4, 4).scale((1.0 - p) / 4.0);
    DensityMatrix::new(2, 2, rho)
}

/// `F·|Φ⁺⟩⟨Φ⁺| + (1 − F)/(d² − 1)·(I − |Φ⁺⟩⟨Φ⁺|)` on `d × d`.
pub fn isotropic(d: usize, fidelity: f64) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::domain(format!(
            "isotropic states need d >= 2, got {d}"
        )));
    }
    if !(0.0..=1.0).contains(&fidelity) {
        return Err(Error::domain(format!(
            "fidelity must lie in [0, 1], got {fidelity}"
        )));
    }
    let dd = d * d;
    let mut phi = ComplexVector::zeros(dd);
    for a in 0..d {
        phi[a * d + a] = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    }
    let proj = &phi * phi.adjoint();
    let rest =
        (ComplexMatrix::identity(dd, dd) - &proj).scale((1.0 - fidelity) / (dd as f64 - 1.0));
    DensityMatrix::new(d, d, proj.scale(fidelity) + rest)
}

/// `ρ_A ⊗ ρ_B`; both factors are validated as local states.
pub fn product(rho_a: &ComplexMatrix, rho_b: &ComplexMatrix) -> Result<DensityMatrix> {
    for (name, r) in [("first", rho_a), ("second", rho_b)] {
        if r.nrows() != r.ncols() || r.nrows() < 2 {
            return Err(Error::domain(format!(
                "{name} factor must be square with dimension >= 2"
            )));
        }
    }
    DensityMatrix::new(rho_a.nrows(), rho_b.nrows(), rho_a.kronecker(rho_b))
}

/// Product of two pure local states.
pub fn product_pure(alpha: &ComplexVector, beta: &ComplexVector) -> Result<DensityMatrix> {
    DensityMatrix::from_pure(alpha.len(), beta.len(), &alpha.kronecker(beta))
}

/// `G·G† / tr(G·G†)` for a complex Gaussian `mn × rank` matrix `G`.
pub fn random_density(m: usize, n: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    let d = m * n;
    if rank < 1 || rank > d {
        return Err(Error::domain(format!(
            "rank must lie in [1, {d}], got {rank}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix(d, rank, &mut rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    DensityMatrix::new(m, n, rho.unscale(tr))
}

/// `Σ_i p_i |α_i⟩⟨α_i| ⊗ |β_i⟩⟨β_i|` with Haar-random unit vectors and flat
/// Dirichlet weights.
pub fn random_separable(m: usize, n: usize, terms: usize, seed: u64) -> Result<DensityMatrix> {
    if terms < 1 {
        return Err(Error::domain("a separable mixture needs at least one term"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights: Vec<f64> = (0..terms).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let d = m * n;
    let mut rho = ComplexMatrix::zeros(d, d);
    for w in weights {
        let alpha = gaussian_matrix(m, 1, &mut rng).column(0).normalize();
        let beta = gaussian_matrix(n, 1, &mut rng).column(0).normalize();
        let psi = alpha.kronecker(&beta);
        rho += (&psi * psi.adjoint()).scale(w);
    }
    DensityMatrix::new(m, n, rho)
}
