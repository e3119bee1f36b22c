//! Dense complex linear algebra used by everything else.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex64`.  The Hermitian
//! eigensolver and the SVD delegate to `nalgebra`; the Takagi factorisation is
//! built here on top of a real symmetric embedding.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Numerical thresholds shared by the whole pipeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative bound on `‖H − H†‖_F / (1 + ‖H‖_F)`.
    pub hermitian: f64,
    /// Relative bound on `‖S − Sᵀ‖_F / (1 + ‖S‖_F)`.
    pub symmetric: f64,
    /// Eigenvalues (and Takagi values) at or below this count as zero.
    pub rank: f64,
    /// `a^r` above this is a violation; at or below is "not positive".
    pub boundary: f64,
    pub trace: f64,
    /// Most negative eigenvalue still accepted as positive semidefinite.
    pub psd: f64,
    /// Relative second singular value below which a pure state is product.
    pub product: f64,
    /// Frobenius error allowed when a certificate rebuilds `ρ`.
    pub certificate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian: 1e-10,
            symmetric: 1e-10,
            rank: 1e-12,
            boundary: 1e-9,
            trace: 1e-8,
            psd: 1e-10,
            product: 1e-6,
            certificate: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HermitianEig {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors as columns, in the order of `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

/// `v · S · vᵀ = diag(lambdas)` with `v` unitary.
#[derive(Clone, Debug)]
pub struct TakagiResult {
    pub v: ComplexMatrix,
    /// Nonnegative, descending.
    pub lambdas: Vec<f64>,
}

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn hermitian_defect(h: &ComplexMatrix) -> f64 {
    (h - h.adjoint()).norm() / (1.0 + h.norm())
}

pub fn symmetric_defect(s: &ComplexMatrix) -> f64 {
    (s - s.transpose()).norm() / (1.0 + s.norm())
}

fn require_square(m: &ComplexMatrix, what: &str) -> Result<()> {
    if m.nrows() == 0 || m.nrows() != m.ncols() {
        return Err(Error::domain(format!(
            "{what} must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Multiplies each column by a phase so that its largest-magnitude component
/// (first one on ties) is real and positive.
pub fn fix_column_phases(v: &mut ComplexMatrix) {
    for mut col in v.column_iter_mut() {
        let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            continue;
        }
        let pivot = col
            .iter()
            .position(|z| z.norm() >= max * (1.0 - 1e-12))
            .unwrap_or(0);
        let phase = col[pivot].conj() / col[pivot].norm();
        col.iter_mut().for_each(|z| *z *= phase);
    }
}

pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianEig> {
    hermitian_eig_with(h, &Tolerances::default())
}

pub fn hermitian_eig_with(h: &ComplexMatrix, tol: &Tolerances) -> Result<HermitianEig> {
    require_square(h, "Hermitian eigenproblem input")?;
    let defect = hermitian_defect(h);
    if defect > tol.hermitian {
        return Err(Error::domain(format!(
            "matrix is not Hermitian (relative defect {defect:e})"
        )));
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = eig.eigenvectors.select_columns(&order);
    fix_column_phases(&mut eigenvectors);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Takagi factorisation of a complex symmetric matrix.
///
/// Works on the real symmetric embedding `[[Re S, Im S], [Im S, −Re S]]`,
/// whose eigenvalues are `±λ_i`.  An eigenvector `(a; b)` for `+λ` gives a
/// column `u = a + i·b` with `S·conj(u) = λ·u`.  Small Takagi values are
/// split off and refactored on the orthogonal complement at their own scale,
/// so clusters near zero (where `+λ` and `−λ` nearly collide) stay accurate.
pub fn takagi(s: &ComplexMatrix) -> Result<TakagiResult> {
    takagi_with(s, &Tolerances::default())
}

pub fn takagi_with(s: &ComplexMatrix, tol: &Tolerances) -> Result<TakagiResult> {
    require_square(s, "Takagi input")?;
    let defect = symmetric_defect(s);
    if defect > tol.symmetric {
        return Err(Error::domain(format!(
            "matrix is not symmetric (relative defect {defect:e})"
        )));
    }
    let sym = (s + s.transpose()).scale(0.5);
    let floor = sym.norm() * 1e-15;
    let mut u = takagi_columns(&sym, floor)?;

    // v = u†; make every diagonal entry of v·S·vᵀ real nonnegative.
    let d = u.adjoint() * &sym * u.conjugate();
    for (i, mut col) in u.column_iter_mut().enumerate() {
        let di = d[(i, i)];
        if di.norm() > 0.0 {
            let phase = C64::from_polar(1.0, 0.5 * di.arg());
            col.iter_mut().for_each(|z| *z *= phase);
        }
    }
    let d = u.adjoint() * &sym * u.conjugate();
    let raw: Vec<f64> = (0..u.ncols()).map(|i| d[(i, i)].re.max(0.0)).collect();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]).then(a.cmp(&b)));
    let u = u.select_columns(&order);
    Ok(TakagiResult {
        v: u.adjoint(),
        lambdas: order.iter().map(|&i| raw[i]).collect(),
    })
}

/// Unitary `U` whose columns satisfy `S·conj(u_i) ≈ λ_i·u_i` (phases unfixed).
fn takagi_columns(s: &ComplexMatrix, floor: f64) -> Result<ComplexMatrix> {
    const SPLIT: f64 = 1e-3;
    let l = s.nrows();
    let scale = s.norm();
    if scale <= floor || scale == 0.0 {
        return Ok(ComplexMatrix::identity(l, l));
    }
    let mut emb = DMatrix::<f64>::zeros(2 * l, 2 * l);
    for i in 0..l {
        for j in 0..l {
            let z = s[(i, j)] / scale;
            emb[(i, j)] = z.re;
            emb[(i, j + l)] = z.im;
            emb[(i + l, j)] = z.im;
            emb[(i + l, j + l)] = -z.re;
        }
    }
    let eig = SymmetricEigen::new(emb);
    let mut order: Vec<usize> = (0..2 * l).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let kept: Vec<usize> = order
        .into_iter()
        .take_while(|&i| eig.eigenvalues[i] > SPLIT)
        .take(l)
        .collect();

    let mut top = ComplexMatrix::zeros(l, kept.len());
    for (c, &i) in kept.iter().enumerate() {
        for r in 0..l {
            top[(r, c)] = C64::new(eig.eigenvectors[(r, i)], eig.eigenvectors[(r + l, i)]);
        }
    }
    let top = reorthonormalize(&top)?;
    if top.ncols() == l {
        return Ok(top);
    }
    let comp = orthonormal_complement(&top)?;
    let block = comp.adjoint() * s * comp.conjugate();
    let block = (&block + block.transpose()).scale(0.5);
    let inner = takagi_columns(&block, floor)?;
    let tail = comp * inner;
    let mut out = ComplexMatrix::zeros(l, l);
    out.columns_mut(0, top.ncols()).copy_from(&top);
    out.columns_mut(top.ncols(), tail.ncols()).copy_from(&tail);
    Ok(out)
}

/// Two-pass modified Gram-Schmidt on the columns (a QR retraction with
/// positive diagonal `R`).
pub fn reorthonormalize(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mut q = m.clone();
    let ncols = q.ncols();
    for j in 0..ncols {
        let original = q.column(j).norm();
        for _pass in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dotc(&q.column(j));
                let qi = q.column(i).clone_owned();
                q.column_mut(j).axpy(-proj, &qi, C64::new(1.0, 0.0));
            }
        }
        let nrm = q.column(j).norm();
        if original == 0.0 || nrm <= 1e-10 * original || !nrm.is_finite() {
            return Err(Error::DegenerateStep(format!(
                "column {} is linearly dependent on the previous ones",
                j + 1
            )));
        }
        q.column_mut(j).unscale_mut(nrm);
    }
    Ok(q)
}

/// Orthonormal basis of the orthogonal complement of the (orthonormal)
/// columns of `u`, built greedily from the standard basis.
pub fn orthonormal_complement(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let k = u.nrows();
    let mut basis: Vec<ComplexVector> = u.column_iter().map(|c| c.clone_owned()).collect();
    let mut extra: Vec<ComplexVector> = Vec::new();
    while basis.len() < k {
        let mut best: Option<(f64, ComplexVector)> = None;
        for e in 0..k {
            let mut v = ComplexVector::zeros(k);
            v[e] = C64::new(1.0, 0.0);
            for _pass in 0..2 {
                for b in &basis {
                    let proj = b.dotc(&v);
                    v.axpy(-proj, b, C64::new(1.0, 0.0));
                }
            }
            let nrm = v.norm();
            if best.as_ref().is_none_or(|(bn, _)| nrm > *bn + 1e-14) {
                best = Some((nrm, v));
            }
        }
        let (nrm, v) = best.expect("k > 0");
        if nrm < 1e-8 {
            return Err(Error::DegenerateStep(
                "complement is numerically empty".into(),
            ));
        }
        let v = v.unscale(nrm);
        basis.push(v.clone());
        extra.push(v);
    }
    if extra.is_empty() {
        return Ok(ComplexMatrix::zeros(k, 0));
    }
    Ok(ComplexMatrix::from_columns(&extra))
}

/// Gaussian `k × l` fill (row-major draw order), then orthonormalised.
pub fn random_orthonormal_columns(k: usize, l: usize, seed: u64) -> Result<ComplexMatrix> {
    if l == 0 || k < l {
        return Err(Error::domain(format!(
            "need k >= l >= 1 for orthonormal columns, got k={k}, l={l}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix(k, l, &mut rng);
    reorthonormalize(&g)
}

/// Complex Gaussian matrix with independent standard normal real and
/// imaginary parts, drawn in row-major order.
pub fn gaussian_matrix<R: rand::Rng>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let mut g = ComplexMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            g[(r, c)] = C64::new(re, im);
        }
    }
    g
}

/// `‖u†u − I‖_F`.
pub fn orthonormality_defect(u: &ComplexMatrix) -> f64 {
    let g = u.adjoint() * u;
    (g - ComplexMatrix::identity(u.ncols(), u.ncols())).norm()
}
