//! Explicit ensembles that satisfy a single pair.
//!
//! With the Takagi basis `|y_j⟩` of a pair (`⟨y_i|B|y_j*⟩ = λ_i δ_ij`), the
//! members
//!
//! ```text
//! |z_i⟩ = 1/(2√k) · Σ_j s_ij · e^{iθ_j} · |y_j⟩,   i = 1..4k
//! ```
//!
//! rebuild `ρ` whenever the sign columns `s_·j` are orthogonal, and each has
//! pair residual `(1/4k)·Σ_j e^{−2iθ_j} λ_j`.  Choosing the phases so the
//! polygon with sides `λ_j` closes makes every residual vanish, which is
//! possible exactly when `λ_1 ≤ Σ_{j≥2} λ_j`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;

use crate::criterion::{a_value, coefficient_matrix, scaled_eigvecs, ScaledEigvecs};
use crate::matcore::{singular_values, takagi, ComplexMatrix, ComplexVector, Tolerances};
use crate::pairgen::{build_pair_operator, enumerate_pairs, PairIndex, PairOperator};
use crate::toolkit::DensityMatrix;
use crate::{Error, Result};

/// Relative slack allowed when checking the polygon inequality.
const POLYGON_SLACK: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct CanonicalBasis {
    pub vectors: Vec<ComplexVector>,
    pub lambdas: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PureEnsemble {
    pub m: usize,
    pub n: usize,
    pub members: Vec<ComplexVector>,
}

impl PureEnsemble {
    pub fn to_matrix(&self) -> ComplexMatrix {
        let d = self.m * self.n;
        self.members
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, z| acc + z * z.adjoint())
    }
}

/// `±1` matrix with `rows = 4k` and orthogonal columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<i8>,
}

impl SignMatrix {
    /// 1-based.
    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.entries[(row - 1) * self.cols + (col - 1)]
    }

    pub fn row(&self, row: usize) -> &[i8] {
        &self.entries[(row - 1) * self.cols..row * self.cols]
    }
}

pub fn canonical_basis(x: &ScaledEigvecs, b: &PairOperator) -> Result<CanonicalBasis> {
    let tau = crate::criterion::tau_matrix(x, b)?;
    let t = takagi(&tau)?;
    // y_i = Σ_j conj(v_ij) x_j, i.e. Y = X·v†
    let y = x.as_matrix() * t.v.adjoint();
    Ok(CanonicalBasis {
        vectors: y.column_iter().map(|c| c.clone_owned()).collect(),
        lambdas: t.lambdas,
    })
}

/// Phases `φ_j` with `Σ_j lengths_j·e^{iφ_j} = 0`, in `[0, 2π)`.
///
/// Lengths are processed largest first.  The largest side is laid along the
/// real axis; the remaining sides must then sum to a resultant `r` that is
/// feasible for them and closes the triangle with the running target.
pub fn close_polygon(lengths: &[f64]) -> Result<Vec<f64>> {
    if lengths.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::domain(
            "polygon side lengths must be finite and nonnegative",
        ));
    }
    let total: f64 = lengths.iter().sum();
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|&a, &b| lengths[b].total_cmp(&lengths[a]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| lengths[i]).collect();
    if let Some(&largest) = sorted.first() {
        let rest = total - largest;
        if largest > rest + POLYGON_SLACK * total {
            return Err(Error::Infeasible { largest, rest });
        }
    }
    let mut angles = vec![0.0; sorted.len()];
    realize(&sorted, 0.0, &mut angles);
    let mut out = vec![0.0; lengths.len()];
    for (slot, &orig) in order.iter().enumerate() {
        out[orig] = if lengths[orig] == 0.0 {
            0.0
        } else {
            angles[slot].rem_euclid(TAU)
        };
    }
    Ok(out)
}

/// Range of resultant magnitudes reachable by sides `l` (sorted descending).
fn reachable(l: &[f64]) -> (f64, f64) {
    let sum: f64 = l.iter().sum();
    let lo = l.first().map_or(0.0, |&big| (2.0 * big - sum).max(0.0));
    (lo, sum)
}

/// Angles for sides `l` (descending) so that they sum to `target ≥ 0` on the
/// positive real axis.
fn realize(l: &[f64], target: f64, angles: &mut [f64]) {
    match l.len() {
        0 => return,
        1 => {
            angles[0] = 0.0;
            return;
        }
        _ => {}
    }
    let head = l[0];
    let (lo, hi) = reachable(&l[1..]);
    let r = (target - head).abs().clamp(lo, hi);
    // triangle (head, r, target); head makes angle -phi with the real axis
    let (phi, rest_dir) = if head == 0.0 {
        (0.0, 0.0)
    } else if target == 0.0 {
        (0.0, PI)
    } else {
        let cos =
            ((head * head + target * target - r * r) / (2.0 * head * target)).clamp(-1.0, 1.0);
        let phi = -cos.acos();
        let rest = C64::new(target, 0.0) - C64::from_polar(head, phi);
        (phi, if rest.norm() > 0.0 { rest.arg() } else { 0.0 })
    };
    angles[0] = phi;
    realize(&l[1..], r, &mut angles[1..]);
    for a in &mut angles[1..] {
        *a += rest_dir;
    }
}

fn check_order(total_rows: usize) -> Result<u32> {
    if total_rows < 4 || !total_rows.is_power_of_two() {
        return Err(Error::domain(format!(
            "sign matrices need 4k to be a power of two >= 4, got {total_rows}"
        )));
    }
    Ok(total_rows.trailing_zeros())
}

/// Rows `1..4k`, columns `1..l` of the order-`4k` Sylvester matrix with bit
/// reversed row labels: `s(r, j) = (−1)^popcount(bitrev(r−1) & (j−1))`.
pub fn sign_matrix(k: usize, l: usize) -> Result<SignMatrix> {
    let rows = 4 * k;
    let bits = check_order(rows)?;
    if l > rows {
        return Err(Error::domain(format!("need 4k >= l, got 4k={rows}, l={l}")));
    }
    let mut entries = Vec::with_capacity(rows * l);
    for r in 0..rows {
        let rev = (r as u32).reverse_bits() >> (32 - bits);
        for j in 0..l {
            let parity = (rev & j as u32).count_ones() % 2;
            entries.push(if parity == 0 { 1 } else { -1 });
        }
    }
    Ok(SignMatrix {
        rows,
        cols: l,
        entries,
    })
}

/// Smallest admissible `k`: `4k` the least power of two `≥ max(4, l)`.
pub fn minimal_k(l: usize) -> usize {
    l.max(4).next_power_of_two() / 4
}

/// Ensemble of `ρ` whose members all make pair `pair` parallel.
pub fn single_pair_decomposition(
    rho: &DensityMatrix,
    pair: PairIndex,
    k: Option<usize>,
    tol: &Tolerances,
) -> Result<PureEnsemble> {
    let x = scaled_eigvecs(rho, tol, None)?;
    let b = build_pair_operator(rho.m(), rho.n(), pair)?;
    let number = enumerate_pairs(rho.m(), rho.n())?
        .iter()
        .position(|p| *p == pair)
        .map_or(0, |r| r + 1);
    let basis = canonical_basis(&x, &b)?;
    let l = basis.vectors.len();
    let l_prime = basis.lambdas.iter().filter(|&&s| s > tol.rank).count();
    let a = a_value(&basis.lambdas, l_prime);
    if a > tol.boundary {
        return Err(Error::CriterionFailure {
            pair: number,
            a_value: a,
        });
    }
    let k = k.unwrap_or_else(|| minimal_k(l));
    let signs = sign_matrix(k, l)?;

    let mut lengths = basis.lambdas.clone();
    let rest: f64 = lengths[1..].iter().sum();
    if lengths[0] > rest {
        lengths[0] = rest;
    }
    let theta: Vec<f64> = close_polygon(&lengths)?
        .into_iter()
        .map(|p| 0.5 * p)
        .collect();
    let scale = 1.0 / (2.0 * (k as f64).sqrt());
    let phased: Vec<ComplexVector> = basis
        .vectors
        .iter()
        .zip(&theta)
        .map(|(y, &t)| y * C64::from_polar(scale, t))
        .collect();
    let members = (1..=signs.rows)
        .map(|i| {
            signs
                .row(i)
                .iter()
                .zip(&phased)
                .fold(ComplexVector::zeros(rho.dim()), |acc, (&s, y)| {
                    acc + y.scale(s as f64)
                })
        })
        .collect();
    Ok(PureEnsemble {
        m: rho.m(),
        n: rho.n(),
        members,
    })
}

#[derive(Clone, Debug)]
pub struct EnsembleReport {
    /// `‖Σ|z⟩⟨z| − ρ‖_F`.
    pub reconstruction_error: f64,
    /// `max_{i,r} |⟨z_i|B^r|z_i*⟩|` over the requested pairs.
    pub max_pair_residual: f64,
    /// Second singular value of each member's coefficient matrix.
    pub second_singular_values: Vec<f64>,
}

pub fn verify_ensemble(
    e: &PureEnsemble,
    rho: &DensityMatrix,
    pairs: &[PairOperator],
) -> EnsembleReport {
    let reconstruction_error = (e.to_matrix() - rho.matrix()).norm();
    let max_pair_residual = e
        .members
        .iter()
        .flat_map(|z| pairs.iter().map(move |b| b.form_unchecked(z, z).norm()))
        .fold(0.0, f64::max);
    let second_singular_values = e
        .members
        .iter()
        .map(|z| {
            singular_values(&coefficient_matrix(z, e.m, e.n))
                .get(1)
                .copied()
                .unwrap_or(0.0)
        })
        .collect();
    EnsembleReport {
        reconstruction_error,
        max_pair_residual,
        second_singular_values,
    }
}
