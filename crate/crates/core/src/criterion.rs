//! The per-pair spectral test, the partial transpose, and the classification
//! pipeline that ties them to the ensemble search.

use rayon::prelude::*;
use serde::Serialize;

use crate::matcore::{
    hermitian_eig_with, singular_values, symmetric_defect, ComplexMatrix, ComplexVector, Tolerances,
};
use crate::pairgen::{all_pair_operators, PairIndex, PairOperator};
use crate::search::{self, SearchConfig, SearchReport, SeparableCertificate};
use crate::toolkit::DensityMatrix;
use crate::{Error, Result};

/// Eigenvectors of `ρ` scaled so that `⟨x_i|x_i⟩ = t_i`, one per eigenvalue
/// above the rank tolerance.  `Σ_i |x_i⟩⟨x_i| = ρ`.
#[derive(Clone, Debug)]
pub struct ScaledEigvecs {
    pub m: usize,
    pub n: usize,
    pub vectors: Vec<ComplexVector>,
    /// The `t_i`, in the order of `vectors`.
    pub weights: Vec<f64>,
    pub rank_tol: f64,
}

impl ScaledEigvecs {
    pub fn l(&self) -> usize {
        self.vectors.len()
    }

    /// The vectors as columns of an `mn × l` matrix.
    pub fn as_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(&self.vectors)
    }

    /// `Σ_i |x_i⟩⟨x_i|`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let x = self.as_matrix();
        &x * x.adjoint()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub pair: PairIndex,
    #[serde(skip)]
    pub tau: ComplexMatrix,
    pub lambdas: Vec<f64>,
    pub l_prime: usize,
    pub a_value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

impl TryFrom<u8> for Subsystem {
    type Error = Error;

    fn try_from(tag: u8) -> Result<Self> {
        match tag {
            1 => Ok(Subsystem::First),
            2 => Ok(Subsystem::Second),
            _ => Err(Error::domain(format!(
                "subsystem tag must be 1 or 2, got {tag}"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Verdict {
    SeparableCertified(SeparableCertificate),
    /// 1-based label of the first pair with `a^r` above the boundary tolerance.
    EntangledByPairCriterion(usize),
    EntangledByPPT,
    Inconclusive {
        best_residual: f64,
        k: usize,
        restarts: usize,
    },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::SeparableCertified(_) => "SeparableCertified",
            Verdict::EntangledByPairCriterion(_) => "EntangledByPairCriterion",
            Verdict::EntangledByPPT => "EntangledByPPT",
            Verdict::Inconclusive { .. } => "Inconclusive",
        }
    }

    pub fn is_entangled(&self) -> bool {
        matches!(
            self,
            Verdict::EntangledByPairCriterion(_) | Verdict::EntangledByPPT
        )
    }
}

#[derive(Clone, Debug)]
pub struct ClassificationReport {
    pub m: usize,
    pub n: usize,
    /// Number of eigenvalues of `ρ` above the rank tolerance.
    pub l: usize,
    pub ppt_min_eigenvalue: f64,
    pub per_pair: Vec<SpectralReport>,
    pub verdict: Verdict,
    pub search: Option<SearchReport>,
}

/// Scaled eigenvectors of `ρ`, or a caller-supplied ensemble after checking
/// that it is one (pairwise orthogonal, rebuilds `ρ`, right count).
pub fn scaled_eigvecs(
    rho: &DensityMatrix,
    tol: &Tolerances,
    basis_override: Option<&[ComplexVector]>,
) -> Result<ScaledEigvecs> {
    let eig = hermitian_eig_with(rho.matrix(), tol)?;
    let kept: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > tol.rank)
        .collect();
    let (vectors, weights) = match basis_override {
        None => {
            let vectors = kept
                .iter()
                .map(|&i| eig.eigenvectors.column(i).scale(eig.eigenvalues[i].sqrt()))
                .collect();
            let weights = kept.iter().map(|&i| eig.eigenvalues[i]).collect();
            (vectors, weights)
        }
        Some(given) => {
            check_override(rho, given, kept.len())?;
            let weights = given.iter().map(|v| v.norm_squared()).collect();
            (given.to_vec(), weights)
        }
    };
    Ok(ScaledEigvecs {
        m: rho.m(),
        n: rho.n(),
        vectors,
        weights,
        rank_tol: tol.rank,
    })
}

fn check_override(rho: &DensityMatrix, given: &[ComplexVector], rank: usize) -> Result<()> {
    const TOL: f64 = 1e-10;
    if given.len() != rank {
        return Err(Error::domain(format!(
            "override has {} vectors but the state has rank {rank}",
            given.len()
        )));
    }
    if let Some(v) = given.iter().find(|v| v.len() != rho.dim()) {
        return Err(Error::domain(format!(
            "override vector has length {}, expected {}",
            v.len(),
            rho.dim()
        )));
    }
    for (i, a) in given.iter().enumerate() {
        for b in &given[i + 1..] {
            if a.dotc(b).norm() > TOL {
                return Err(Error::domain(
                    "override vectors are not pairwise orthogonal",
                ));
            }
        }
    }
    let sum = given
        .iter()
        .fold(ComplexMatrix::zeros(rho.dim(), rho.dim()), |acc, v| {
            acc + v * v.adjoint()
        });
    let err = (sum - rho.matrix()).norm();
    if err > TOL {
        return Err(Error::domain(format!(
            "override vectors rebuild the state only to {err:e}"
        )));
    }
    Ok(())
}

/// `τ_ij = ⟨x_i| B |x_j*⟩`.
pub fn tau_matrix(x: &ScaledEigvecs, b: &PairOperator) -> Result<ComplexMatrix> {
    if b.dim() != x.m * x.n || x.vectors.iter().any(|v| v.len() != b.dim()) {
        return Err(Error::domain(format!(
            "pair operator is {}x{} but the vectors have length {}",
            b.m,
            b.n,
            x.m * x.n
        )));
    }
    let l = x.l();
    let mut tau = ComplexMatrix::zeros(l, l);
    for i in 0..l {
        for j in i..l {
            let t = b.form_unchecked(&x.vectors[i], &x.vectors[j]);
            tau[(i, j)] = t;
            tau[(j, i)] = t;
        }
    }
    Ok(tau)
}

/// Square roots of the eigenvalues of `τ·conj(τ)` (the singular values of
/// `τ`), descending, and how many exceed `rank_tol`.
pub fn pair_spectrum(tau: &ComplexMatrix, rank_tol: f64) -> Result<(Vec<f64>, usize)> {
    if tau.nrows() != tau.ncols() {
        return Err(Error::domain("tau must be square"));
    }
    let defect = symmetric_defect(tau);
    if defect > Tolerances::default().symmetric {
        return Err(Error::domain(format!(
            "tau is not symmetric (relative defect {defect:e})"
        )));
    }
    if tau.nrows() == 0 {
        return Ok((Vec::new(), 0));
    }
    let lambdas = singular_values(tau);
    let l_prime = lambdas.iter().filter(|&&s| s > rank_tol).count();
    Ok((lambdas, l_prime))
}

/// `λ_1 − Σ_{i=2..l'} λ_i`, zero when `l' = 0`.
pub fn a_value(lambdas: &[f64], l_prime: usize) -> f64 {
    if l_prime == 0 {
        return 0.0;
    }
    lambdas[0] - lambdas[1..l_prime].iter().sum::<f64>()
}

pub fn spectral_report(x: &ScaledEigvecs, b: &PairOperator) -> Result<SpectralReport> {
    let tau = tau_matrix(x, b)?;
    let (lambdas, l_prime) = pair_spectrum(&tau, x.rank_tol)?;
    let a = a_value(&lambdas, l_prime);
    Ok(SpectralReport {
        pair: b.pair,
        tau,
        lambdas,
        l_prime,
        a_value: a,
    })
}

/// One report per operator, in operator order (computed in parallel).
pub fn spectral_reports(x: &ScaledEigvecs, ops: &[PairOperator]) -> Result<Vec<SpectralReport>> {
    ops.par_iter().map(|b| spectral_report(x, b)).collect()
}

/// Partial transpose of a raw `mn × mn` matrix.
pub fn partial_transpose_matrix(
    rho: &ComplexMatrix,
    m: usize,
    n: usize,
    which: Subsystem,
) -> ComplexMatrix {
    let d = m * n;
    let mut out = ComplexMatrix::zeros(d, d);
    for a in 0..m {
        for mu in 0..n {
            for b in 0..m {
                for nu in 0..n {
                    let src = match which {
                        Subsystem::Second => (a * n + nu, b * n + mu),
                        Subsystem::First => (b * n + mu, a * n + nu),
                    };
                    out[(a * n + mu, b * n + nu)] = rho[src];
                }
            }
        }
    }
    out
}

pub fn partial_transpose(rho: &DensityMatrix, which: Subsystem) -> ComplexMatrix {
    partial_transpose_matrix(rho.matrix(), rho.m(), rho.n(), which)
}

pub fn ppt_min_eigenvalue(rho: &DensityMatrix) -> Result<f64> {
    let pt = partial_transpose(rho, Subsystem::Second);
    let eig = hermitian_eig_with(&pt, &Tolerances::default())?;
    Ok(*eig.eigenvalues.last().expect("non-empty"))
}

/// Reshapes `ψ` into its `m × n` coefficient matrix, `A_ab = ψ[(a−1)n + b]`.
pub fn coefficient_matrix(psi: &ComplexVector, m: usize, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(m, n, |a, b| psi[a * n + b])
}

/// Product test via the second singular value of the coefficient matrix,
/// which also covers states whose first row or column vanishes.
pub fn pure_product_check(psi: &ComplexVector, m: usize, n: usize, tol: f64) -> Result<bool> {
    if psi.len() != m * n {
        return Err(Error::domain(format!(
            "vector has length {}, expected {}",
            psi.len(),
            m * n
        )));
    }
    let nrm = psi.norm();
    if nrm == 0.0 {
        return Err(Error::domain("zero vector has no product structure"));
    }
    let sv = singular_values(&coefficient_matrix(psi, m, n));
    Ok(sv.get(1).copied().unwrap_or(0.0) <= tol * nrm)
}

/// `a^1` of the single pair of a two-qubit state.  It coincides with
/// `λ1 − λ2 − λ3 − λ4` built from the spin-flipped state, since the one pair
/// operator on 2×2 is `σ_y ⊗ σ_y`.
pub fn pair_concurrence_2x2(rho: &DensityMatrix) -> Result<f64> {
    if rho.m() != 2 || rho.n() != 2 {
        return Err(Error::domain(format!(
            "pair concurrence needs a 2x2 system, got {}x{}",
            rho.m(),
            rho.n()
        )));
    }
    let tol = Tolerances::default();
    let x = scaled_eigvecs(rho, &tol, None)?;
    let ops = all_pair_operators(2, 2)?;
    Ok(spectral_report(&x, &ops[0])?.a_value)
}

/// Eigen-ensemble, pair spectra, the `a^r` and partial
/// transpose tests, then the joint search.
pub fn classify(rho: &DensityMatrix, config: &SearchConfig) -> Result<ClassificationReport> {
    let tol = &config.tol;
    let x = scaled_eigvecs(rho, tol, None)?;
    let ops = all_pair_operators(rho.m(), rho.n())?;
    let per_pair = spectral_reports(&x, &ops)?;
    let ppt = ppt_min_eigenvalue(rho)?;
    let report = |verdict, search| ClassificationReport {
        m: rho.m(),
        n: rho.n(),
        l: x.l(),
        ppt_min_eigenvalue: ppt,
        per_pair: per_pair.clone(),
        verdict,
        search,
    };

    if x.l() == 1 && pure_product_check(&x.vectors[0], rho.m(), rho.n(), tol.product)? {
        let u = ComplexMatrix::identity(1, 1);
        if let Ok(cert) = search::extract_certificate(&u, &x, tol) {
            if cert.reconstruction_error(rho.matrix()) <= tol.certificate {
                return Ok(report(Verdict::SeparableCertified(cert), None));
            }
        }
    }
    if let Some(r) = per_pair.iter().position(|s| s.a_value > tol.boundary) {
        return Ok(report(Verdict::EntangledByPairCriterion(r + 1), None));
    }
    if ppt < -tol.boundary {
        return Ok(report(Verdict::EntangledByPPT, None));
    }

    let taus: Vec<ComplexMatrix> = per_pair.iter().map(|s| s.tau.clone()).collect();
    let found = search::minimize_with(&x, &taus, config)?;
    let verdict = match &found.certificate {
        Some(cert) if cert.reconstruction_error(rho.matrix()) <= tol.certificate => {
            Verdict::SeparableCertified(cert.clone())
        }
        _ => Verdict::Inconclusive {
            best_residual: found.best_residual,
            k: found.k,
            restarts: found.restarts_used,
        },
    };
    Ok(report(verdict, Some(found)))
}
