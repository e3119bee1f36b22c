//! Parallel pairs of the coefficient matrix and their operators `B^r`.
//!
//! A pure state `ψ = Σ A_ab |a⟩|b⟩` on `m × n` is product iff every row of `A`
//! is parallel to the first.  Row `p` and column `q` (both ≥ 2) give the pair
//! `(A_11, A_1q) ∥ (A_p1, A_pq)`, and `B^r` is the symmetric ±1 matrix whose
//! form `ψ†·B^r·conj(ψ)` is twice the conjugated 2×2 minor of that pair.
//!
//! Positions are reported 1-based with `idx(a, b) = (a − 1)·n + b`.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::matcore::{ComplexMatrix, ComplexVector};
use crate::{Error, Result};

/// One pair, labelled by the row `p` and column `q` it reaches from the anchor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PairIndex {
    pub p: usize,
    pub q: usize,
}

impl fmt::Display for PairIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(p={}, q={})", self.p, self.q)
    }
}

/// One nonzero of `B^r`, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub value: i8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairOperator {
    pub m: usize,
    pub n: usize,
    pub pair: PairIndex,
    pub entries: [Entry; 4],
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m < 2 || n < 2 {
        return Err(Error::domain(format!(
            "subsystem dimensions must both be at least 2, got {m}x{n}"
        )));
    }
    Ok(())
}

/// All `(m−1)(n−1)` pairs, `q` ascending then `p` ascending.
pub fn enumerate_pairs(m: usize, n: usize) -> Result<Vec<PairIndex>> {
    check_dims(m, n)?;
    Ok((2..=n)
        .flat_map(|q| (2..=m).map(move |p| PairIndex { p, q }))
        .collect())
}

pub fn build_pair_operator(m: usize, n: usize, pair: PairIndex) -> Result<PairOperator> {
    check_dims(m, n)?;
    if !(2..=m).contains(&pair.p) || !(2..=n).contains(&pair.q) {
        return Err(Error::domain(format!(
            "pair {pair} is out of range for {m}x{n}"
        )));
    }
    let idx = |a: usize, b: usize| (a - 1) * n + b;
    let (anchor, far) = (idx(1, 1), idx(pair.p, pair.q));
    let (top, left) = (idx(1, pair.q), idx(pair.p, 1));
    Ok(PairOperator {
        m,
        n,
        pair,
        entries: [
            Entry {
                row: anchor,
                col: far,
                value: -1,
            },
            Entry {
                row: far,
                col: anchor,
                value: -1,
            },
            Entry {
                row: top,
                col: left,
                value: 1,
            },
            Entry {
                row: left,
                col: top,
                value: 1,
            },
        ],
    })
}

/// Operators for every pair, in [`enumerate_pairs`] order.
pub fn all_pair_operators(m: usize, n: usize) -> Result<Vec<PairOperator>> {
    enumerate_pairs(m, n)?
        .into_iter()
        .map(|pair| build_pair_operator(m, n, pair))
        .collect()
}

impl PairOperator {
    pub fn dim(&self) -> usize {
        self.m * self.n
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut b = ComplexMatrix::zeros(d, d);
        for e in &self.entries {
            b[(e.row - 1, e.col - 1)] = C64::new(e.value as f64, 0.0);
        }
        b
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::domain(format!(
                "vector has length {len}, expected {} for a {}x{} system",
                self.dim(),
                self.m,
                self.n
            )));
        }
        Ok(())
    }

    /// `B · conj(ψ)`.
    pub fn tilde(&self, psi: &ComplexVector) -> Result<ComplexVector> {
        self.check_len(psi.len())?;
        let mut out = ComplexVector::zeros(psi.len());
        for e in &self.entries {
            out[e.row - 1] += psi[e.col - 1].conj() * e.value as f64;
        }
        Ok(out)
    }

    /// `⟨a| B |b*⟩` for two vectors, the bilinear form behind `τ^r`.
    pub fn form(&self, a: &ComplexVector, b: &ComplexVector) -> Result<C64> {
        self.check_len(a.len())?;
        self.check_len(b.len())?;
        Ok(self.form_unchecked(a, b))
    }

    pub(crate) fn form_unchecked(&self, a: &ComplexVector, b: &ComplexVector) -> C64 {
        self.entries
            .iter()
            .map(|e| a[e.row - 1].conj() * b[e.col - 1].conj() * e.value as f64)
            .sum()
    }

    /// `c = ⟨ψ| B |ψ*⟩ = 2·(A*_1q·A*_p1 − A*_11·A*_pq)`.
    pub fn residual(&self, psi: &ComplexVector) -> Result<C64> {
        self.form(psi, psi)
    }
}

pub fn tilde(b: &PairOperator, psi: &ComplexVector) -> Result<ComplexVector> {
    b.tilde(psi)
}

pub fn pair_residual(b: &PairOperator, psi: &ComplexVector) -> Result<C64> {
    b.residual(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{gaussian_matrix, singular_values};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn positions(op: &PairOperator) -> Vec<(usize, usize, i8)> {
        let mut v: Vec<_> = op.entries.iter().map(|e| (e.row, e.col, e.value)).collect();
        v.sort();
        v
    }

    fn basis(d: usize, i: usize) -> ComplexVector {
        let mut v = ComplexVector::zeros(d);
        v[i] = C64::new(1.0, 0.0);
        v
    }

    fn random_vec(d: usize, rng: &mut ChaCha8Rng) -> ComplexVector {
        gaussian_matrix(d, 1, rng).column(0).clone_owned()
    }

    #[test]
    fn pair_counts_and_order() {
        assert_eq!(
            enumerate_pairs(2, 2).unwrap(),
            vec![PairIndex { p: 2, q: 2 }]
        );
        let p24: Vec<_> = enumerate_pairs(2, 4)
            .unwrap()
            .iter()
            .map(|x| (x.p, x.q))
            .collect();
        assert_eq!(p24, vec![(2, 2), (2, 3), (2, 4)]);
        let p44: Vec<_> = enumerate_pairs(4, 4)
            .unwrap()
            .iter()
            .map(|x| (x.p, x.q))
            .collect();
        assert_eq!(
            p44,
            vec![
                (2, 2),
                (3, 2),
                (4, 2),
                (2, 3),
                (3, 3),
                (4, 3),
                (2, 4),
                (3, 4),
                (4, 4)
            ]
        );
        assert!(enumerate_pairs(1, 4).is_err());
        assert!(enumerate_pairs(3, 1).is_err());
    }

    #[test]
    fn operators_match_listing() {
        let b = build_pair_operator(2, 4, PairIndex { p: 2, q: 2 }).unwrap();
        assert_eq!(
            positions(&b),
            vec![(1, 6, -1), (2, 5, 1), (5, 2, 1), (6, 1, -1)]
        );
        let b = build_pair_operator(4, 4, PairIndex { p: 3, q: 2 }).unwrap();
        assert_eq!(
            positions(&b),
            vec![(1, 10, -1), (2, 9, 1), (9, 2, 1), (10, 1, -1)]
        );
        let b = build_pair_operator(2, 2, PairIndex { p: 2, q: 2 }).unwrap();
        assert_eq!(
            positions(&b),
            vec![(1, 4, -1), (2, 3, 1), (3, 2, 1), (4, 1, -1)]
        );
        assert!(build_pair_operator(2, 2, PairIndex { p: 3, q: 2 }).is_err());
        assert!(build_pair_operator(2, 2, PairIndex { p: 2, q: 1 }).is_err());
    }

    #[test]
    fn dense_is_symmetric_involutive_on_support() {
        for m in 2..=5 {
            for n in 2..=5 {
                for op in all_pair_operators(m, n).unwrap() {
                    let b = op.to_dense();
                    assert_eq!(b, b.transpose());
                    let sq = &b * &b;
                    let touched: Vec<usize> = op.entries.iter().map(|e| e.row - 1).collect();
                    for i in 0..op.dim() {
                        for j in 0..op.dim() {
                            let want = if i == j && touched.contains(&i) {
                                1.0
                            } else {
                                0.0
                            };
                            assert_eq!(sq[(i, j)], C64::new(want, 0.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tilde_on_basis_vectors() {
        let b = build_pair_operator(2, 2, PairIndex { p: 2, q: 2 }).unwrap();
        assert_eq!(b.tilde(&basis(4, 0)).unwrap(), -basis(4, 3));
        assert_eq!(b.tilde(&basis(4, 1)).unwrap(), basis(4, 2));
        assert!(b.tilde(&basis(5, 0)).is_err());
    }

    #[test]
    fn tilde_matches_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for op in all_pair_operators(3, 4).unwrap() {
            let psi = random_vec(12, &mut rng);
            let dense = op.to_dense() * psi.conjugate();
            assert!((op.tilde(&psi).unwrap() - dense).norm() < 1e-15);
        }
    }

    #[test]
    fn residual_examples() {
        let b = build_pair_operator(2, 2, PairIndex { p: 2, q: 2 }).unwrap();
        assert_eq!(b.residual(&basis(4, 0)).unwrap(), C64::new(0.0, 0.0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = ComplexVector::from_vec(
            vec![h, 0.0, 0.0, h]
                .into_iter()
                .map(|x| C64::new(x, 0.0))
                .collect(),
        );
        assert!((b.residual(&bell).unwrap() - C64::new(-1.0, 0.0)).norm() < 1e-15);
        let plus = ComplexVector::from_vec(
            vec![h, h, 0.0, 0.0]
                .into_iter()
                .map(|x| C64::new(x, 0.0))
                .collect(),
        );
        assert!(b.residual(&plus).unwrap().norm() < 1e-15);
    }

    #[test]
    fn residual_is_twice_the_conjugated_minor() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..1000 {
            let (m, n) = (2 + trial % 3, 2 + (trial / 3) % 3);
            let psi = random_vec(m * n, &mut rng);
            let a = |r: usize, c: usize| psi[(r - 1) * n + c - 1].conj();
            for op in all_pair_operators(m, n).unwrap() {
                let (p, q) = (op.pair.p, op.pair.q);
                let want = (a(1, q) * a(p, 1) - a(1, 1) * a(p, q)) * 2.0;
                assert!((op.residual(&psi).unwrap() - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn products_have_vanishing_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..200 {
            let (m, n) = (2 + trial % 4, 2 + (trial / 4) % 4);
            let alpha = random_vec(m, &mut rng).normalize();
            let beta = random_vec(n, &mut rng).normalize();
            let psi = alpha.kronecker(&beta);
            for op in all_pair_operators(m, n).unwrap() {
                assert!(op.residual(&psi).unwrap().norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn vanishing_minors_with_nonzero_anchor_imply_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..200 {
            let (m, n) = (2 + trial % 4, 2 + (trial / 4) % 4);
            let g = gaussian_matrix(m, n, &mut rng);
            // fill the interior so every anchored minor vanishes
            let mut a = g.clone();
            for p in 1..m {
                for q in 1..n {
                    a[(p, q)] = a[(0, q)] * a[(p, 0)] / a[(0, 0)];
                }
            }
            let psi = ComplexVector::from_iterator(m * n, a.transpose().iter().copied());
            for op in all_pair_operators(m, n).unwrap() {
                assert!(op.residual(&psi).unwrap().norm() <= 1e-12 * psi.norm_squared().max(1.0));
            }
            let sv = singular_values(&a);
            assert!(sv[1] <= 1e-8 * a.norm());
        }
    }
}
