//! Joint search over ensembles `|z_i⟩ = Σ_j conj(u_ij)·|x_j⟩`, `u` with orthonormal
//! columns, for one in which every member makes every pair parallel.
//!
//! The member residual for pair `r` is `⟨z_i|B^r|z_i*⟩ = (u·τ^r·uᵀ)_ii`, so the
//! objective
//!
//! ```text
//! F(u) = Σ_r Σ_i |(u τ^r uᵀ)_ii|²
//! ```
//!
//! only touches `k × l` and `l × l` matrices.  `F` is minimised by projected
//! gradient descent on the set of orthonormal-column matrices with a
//! Barzilai-Borwein trial step, Armijo backtracking and a Gram-Schmidt
//! retraction.  A zero of `F` whose members are all product is a separable
//! decomposition; failing to find one proves nothing.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::criterion::{coefficient_matrix, scaled_eigvecs, spectral_reports, ScaledEigvecs};
use crate::matcore::{
    orthonormality_defect, random_orthonormal_columns, reorthonormalize, ComplexMatrix,
    ComplexVector, Tolerances,
};
use crate::pairgen::{all_pair_operators, PairIndex, PairOperator};
use crate::toolkit::io::format_real;
use crate::toolkit::DensityMatrix;
use crate::{Error, Result};

/// Restarts evaluated together before checking for success.  Fixed so the
/// outcome does not depend on the thread count.
const BATCH: usize = 8;

/// Members lighter than this are dropped from a certificate.
const NEGLIGIBLE_WEIGHT: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Backtracking {
    /// Sufficient-decrease constant.
    pub armijo: f64,
    pub shrink: f64,
    pub max_shrinks: usize,
}

impl Default for Backtracking {
    fn default() -> Self {
        Backtracking {
            armijo: 1e-4,
            shrink: 0.5,
            max_shrinks: 60,
        }
    }
}

/// Search parameters.  Also carries the shared [`Tolerances`] so that a
/// single value configures the whole classification pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    /// Fixed ensemble size; `None` tries `l, 2l, 4l, …` up to `(mn)²`.
    pub k: Option<usize>,
    pub restarts: usize,
    pub max_iters: usize,
    pub backtracking: Backtracking,
    /// `F` at or below this counts as a zero and triggers certificate extraction.
    pub tol_residual: f64,
    /// Descent stops early once `F` reaches this.
    pub polish_residual: f64,
    pub seed: u64,
    pub tol: Tolerances,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            k: None,
            restarts: 50,
            max_iters: 2000,
            backtracking: Backtracking::default(),
            tol_residual: 1e-10,
            polish_residual: 1e-28,
            seed: 0,
            tol: Tolerances::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProductTerm {
    pub weight: f64,
    pub alpha: ComplexVector,
    pub beta: ComplexVector,
}

/// `ρ = Σ_i p_i |α_i⟩⟨α_i| ⊗ |β_i⟩⟨β_i|`.
#[derive(Clone, Debug)]
pub struct SeparableCertificate {
    pub m: usize,
    pub n: usize,
    pub terms: Vec<ProductTerm>,
}

impl SeparableCertificate {
    pub fn to_matrix(&self) -> ComplexMatrix {
        let d = self.m * self.n;
        self.terms
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, t| {
                let psi = t.alpha.kronecker(&t.beta);
                acc + (&psi * psi.adjoint()).scale(t.weight)
            })
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    /// Frobenius distance to `rho`.
    pub fn reconstruction_error(&self, rho: &ComplexMatrix) -> f64 {
        (self.to_matrix() - rho).norm()
    }
}

#[derive(Clone, Debug)]
pub struct SearchReport {
    pub best_residual: f64,
    pub best_u: ComplexMatrix,
    /// Ensemble size of `best_u`.
    pub k: usize,
    pub iterations_used: usize,
    pub restarts_used: usize,
    pub certificate: Option<SeparableCertificate>,
}

/// Result of one descent run.
#[derive(Clone, Debug)]
pub struct Descent {
    pub u: ComplexMatrix,
    pub residual: f64,
    pub iterations: usize,
    /// `F` after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

fn check_shapes(u: &ComplexMatrix, taus: &[ComplexMatrix]) -> Result<()> {
    let l = u.ncols();
    if let Some(t) = taus.iter().find(|t| t.shape() != (l, l)) {
        return Err(Error::domain(format!(
            "tau is {}x{} but u has {l} columns",
            t.nrows(),
            t.ncols()
        )));
    }
    let defect = orthonormality_defect(u);
    if defect > 1e-8 {
        return Err(Error::domain(format!(
            "u does not have orthonormal columns (defect {defect:e})"
        )));
    }
    Ok(())
}

/// `F(u)` plus the products `u·τ^r` and diagonals it was built from.
fn evaluate(u: &ComplexMatrix, taus: &[ComplexMatrix]) -> (f64, Vec<(ComplexMatrix, Vec<C64>)>) {
    let mut total = 0.0;
    let parts = taus
        .iter()
        .map(|tau| {
            let w = u * tau;
            let diag: Vec<C64> = (0..u.nrows())
                .map(|i| {
                    w.row(i)
                        .iter()
                        .zip(u.row(i).iter())
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect();
            total += diag.iter().map(|d| d.norm_sqr()).sum::<f64>();
            (w, diag)
        })
        .collect();
    (total, parts)
}

fn value(u: &ComplexMatrix, taus: &[ComplexMatrix]) -> f64 {
    evaluate(u, taus).0
}

/// `G = 4·Σ_r d^r_i·conj((u τ^r)_ij)`, so that
/// `F(u + εD) = F(u) + ε·Re⟨G, D⟩ + O(ε²)`.
fn gradient_from(u: &ComplexMatrix, parts: &[(ComplexMatrix, Vec<C64>)]) -> ComplexMatrix {
    let mut g = ComplexMatrix::zeros(u.nrows(), u.ncols());
    for (w, diag) in parts {
        for i in 0..u.nrows() {
            let d = diag[i] * 4.0;
            for j in 0..u.ncols() {
                g[(i, j)] += d * w[(i, j)].conj();
            }
        }
    }
    g
}

pub fn joint_residual(u: &ComplexMatrix, taus: &[ComplexMatrix]) -> Result<f64> {
    check_shapes(u, taus)?;
    Ok(value(u, taus))
}

/// Euclidean gradient of [`joint_residual`], treating real and imaginary
/// parts of `u` as independent coordinates.
pub fn residual_gradient(u: &ComplexMatrix, taus: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    check_shapes(u, taus)?;
    let (_, parts) = evaluate(u, taus);
    Ok(gradient_from(u, &parts))
}

/// Projection onto the tangent space at `u`: `G − u·herm(u†G)`.
fn project(u: &ComplexMatrix, g: &ComplexMatrix) -> ComplexMatrix {
    let ug = u.adjoint() * g;
    let herm = (&ug + ug.adjoint()).scale(0.5);
    g - u * herm
}

fn re_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Projected gradient descent from `u0`.  Accepted steps never increase `F`.
pub fn descend(
    taus: &[ComplexMatrix],
    u0: &ComplexMatrix,
    config: &SearchConfig,
) -> Result<Descent> {
    check_shapes(u0, taus)?;
    let bt = &config.backtracking;
    let mut u = u0.clone();
    let (mut f, parts) = evaluate(&u, taus);
    let mut rg = project(&u, &gradient_from(&u, &parts));
    let curvature: f64 = taus.iter().map(|t| t.norm_squared()).sum();
    let mut step = if curvature > 0.0 {
        0.25 / curvature
    } else {
        1.0
    };
    let mut history = vec![f];
    let mut iterations = 0;
    let mut slow = 0;

    while iterations < config.max_iters && f > config.polish_residual {
        let gn2 = rg.norm_squared();
        if gn2 == 0.0 || !gn2.is_finite() {
            break;
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..bt.max_shrinks {
            if let Ok(cand) = reorthonormalize(&(&u - rg.scale(t))) {
                let (fc, parts) = evaluate(&cand, taus);
                if fc <= f - bt.armijo * t * gn2 {
                    accepted = Some((cand, fc, parts));
                    break;
                }
            }
            t *= bt.shrink;
        }
        let Some((cand, fc, parts)) = accepted else {
            break;
        };
        iterations += 1;
        let rg_new = project(&cand, &gradient_from(&cand, &parts));
        let s = &cand - &u;
        let y = &rg_new - &rg;
        let sy = re_inner(&s, &y);
        step = if sy > 0.0 {
            s.norm_squared() / sy
        } else {
            t * 2.0
        };
        slow = if f - fc <= 1e-12 * f { slow + 1 } else { 0 };
        u = cand;
        f = fc;
        rg = rg_new;
        history.push(f);
        if slow >= 100 {
            break;
        }
    }
    Ok(Descent {
        u,
        residual: f,
        iterations,
        history,
    })
}

/// `l, 2l, 4l, …` capped at `(mn)²`, or the single fixed `k`.
pub fn k_schedule(l: usize, mn: usize, fixed: Option<usize>) -> Result<Vec<usize>> {
    let cap = mn * mn;
    if let Some(k) = fixed {
        if k < l || k > cap {
            return Err(Error::domain(format!(
                "k must lie in [{l}, {cap}], got {k}"
            )));
        }
        return Ok(vec![k]);
    }
    let mut out = vec![l];
    while *out.last().unwrap() < cap {
        out.push((out.last().unwrap() * 2).min(cap));
    }
    Ok(out)
}

/// Searches the ensemble of `ρ`'s own eigenvectors.  The caller is expected
/// to have checked every `a^r ≤ 0` first.
pub fn minimize(rho: &DensityMatrix, config: &SearchConfig) -> Result<SearchReport> {
    let x = scaled_eigvecs(rho, &config.tol, None)?;
    let ops = all_pair_operators(rho.m(), rho.n())?;
    let taus: Vec<ComplexMatrix> = spectral_reports(&x, &ops)?
        .into_iter()
        .map(|s| s.tau)
        .collect();
    minimize_with(&x, &taus, config)
}

pub fn minimize_with(
    x: &ScaledEigvecs,
    taus: &[ComplexMatrix],
    config: &SearchConfig,
) -> Result<SearchReport> {
    let l = x.l();
    let schedule = k_schedule(l, x.m * x.n, config.k)?;
    let restarts = config.restarts.max(1);
    let mut best: Option<(Descent, usize)> = None;
    let mut iterations_used = 0;
    let mut restarts_used = 0;

    for &k in &schedule {
        let mut start = 0;
        while start < restarts {
            let end = (start + BATCH).min(restarts);
            let runs: Vec<Descent> = (start..end)
                .into_par_iter()
                .map(|r| {
                    let u0 = random_orthonormal_columns(k, l, config.seed.wrapping_add(r as u64))?;
                    descend(taus, &u0, config)
                })
                .collect::<Result<_>>()?;
            start = end;

            let mut order: Vec<usize> = (0..runs.len()).collect();
            order.sort_by(|&a, &b| {
                runs[a]
                    .residual
                    .total_cmp(&runs[b].residual)
                    .then(a.cmp(&b))
            });
            for run in &runs {
                iterations_used += run.iterations;
                restarts_used += 1;
            }
            for &i in &order {
                if runs[i].residual > config.tol_residual {
                    break;
                }
                if let Ok(cert) = extract_certificate(&runs[i].u, x, &config.tol) {
                    return Ok(SearchReport {
                        best_residual: runs[i].residual,
                        best_u: runs[i].u.clone(),
                        k,
                        iterations_used,
                        restarts_used,
                        certificate: Some(cert),
                    });
                }
            }
            let top = &runs[order[0]];
            if best.as_ref().is_none_or(|(b, _)| top.residual < b.residual) {
                best = Some((top.clone(), k));
            }
        }
    }
    let (run, k) = best.expect("at least one restart runs");
    Ok(SearchReport {
        best_residual: run.residual,
        best_u: run.u,
        k,
        iterations_used,
        restarts_used,
        certificate: None,
    })
}

/// Members `z_i = Σ_j conj(u_ij) x_j` as columns (`mn × k`), so that
/// `⟨z_i|B^r|z_i*⟩ = (u τ^r uᵀ)_ii`.
pub fn ensemble_members(u: &ComplexMatrix, x: &ScaledEigvecs) -> ComplexMatrix {
    x.as_matrix() * u.adjoint()
}

/// Splits every member of the ensemble given by `u` into a weighted product
/// of local unit vectors; fails on the first member that is not product.
pub fn extract_certificate(
    u: &ComplexMatrix,
    x: &ScaledEigvecs,
    tol: &Tolerances,
) -> Result<SeparableCertificate> {
    if u.ncols() != x.l() {
        return Err(Error::domain(format!(
            "u has {} columns but the ensemble has {} vectors",
            u.ncols(),
            x.l()
        )));
    }
    let (m, n) = (x.m, x.n);
    let z = ensemble_members(u, x);
    let mut terms = Vec::new();
    for (i, col) in z.column_iter().enumerate() {
        let weight = col.norm_squared();
        if weight <= NEGLIGIBLE_WEIGHT {
            continue;
        }
        let a = coefficient_matrix(&col.clone_owned(), m, n);
        let svd = a.svd(true, true);
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&p, &q| svd.singular_values[q].total_cmp(&svd.singular_values[p]));
        let second = order.get(1).map_or(0.0, |&j| svd.singular_values[j]);
        let ratio = second / weight.sqrt();
        if ratio > tol.product {
            return Err(Error::NotProduct {
                index: i + 1,
                ratio,
            });
        }
        let lead = order[0];
        let alpha = svd
            .u
            .as_ref()
            .expect("requested")
            .column(lead)
            .clone_owned();
        let beta = svd.v_t.as_ref().expect("requested").row(lead).transpose();
        // put the phase of alpha's largest component into beta
        let pivot = alpha
            .iter()
            .copied()
            .max_by(|p, q| p.norm().total_cmp(&q.norm()))
            .unwrap_or_default();
        let phase = if pivot.norm() > 0.0 {
            pivot.conj() / pivot.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let alpha = alpha * phase;
        let beta = beta * phase.conj();
        terms.push(ProductTerm {
            weight,
            alpha,
            beta: beta.normalize(),
        });
    }
    let cert = SeparableCertificate { m, n, terms };
    let total = cert.total_weight();
    let err = cert.reconstruction_error(&x.reconstruct());
    if (total - x.weights.iter().sum::<f64>()).abs() > 1e-10 || err > tol.certificate {
        return Err(Error::Reconstruction { error: err });
    }
    Ok(cert)
}

/// One quadratic coefficient `w` of `u_ij·u_ij'` (1-based `j ≤ j'`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficient {
    pub j: usize,
    pub jp: usize,
    pub w: C64,
}

#[derive(Clone, Debug)]
pub struct PairConstraint {
    /// 1-based pair label.
    pub number: usize,
    pub pair: PairIndex,
    pub tau: ComplexMatrix,
    pub terms: Vec<Coefficient>,
}

impl PairConstraint {
    /// `Σ w_jj'·u_j·u_j'` for one row of `u`.
    pub fn evaluate(&self, row: &[C64]) -> C64 {
        self.terms
            .iter()
            .map(|c| c.w * row[c.j - 1] * row[c.jp - 1])
            .sum()
    }
}

/// For every pair `r` and every row `i` of `u`:
/// `Σ_{j ≤ j'} (2 − δ_jj')·τ^r_jj'·u_ij·u_ij' = 0`.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub l: usize,
    pub pairs: Vec<PairConstraint>,
}

pub fn emit_constraints(x: &ScaledEigvecs, ops: &[PairOperator]) -> Result<ConstraintSystem> {
    let reports = spectral_reports(x, ops)?;
    let l = x.l();
    let scale = reports
        .iter()
        .flat_map(|r| r.tau.iter().map(|z| 2.0 * z.norm()))
        .fold(0.0, f64::max);
    let cutoff = 1e-13 * scale;
    let pairs = reports
        .into_iter()
        .enumerate()
        .map(|(r, rep)| {
            let mut terms = Vec::new();
            for j in 0..l {
                for jp in j..l {
                    let w = rep.tau[(j, jp)] * if j == jp { 1.0 } else { 2.0 };
                    if w.norm() > cutoff && scale > 0.0 {
                        terms.push(Coefficient {
                            j: j + 1,
                            jp: jp + 1,
                            w,
                        });
                    }
                }
            }
            PairConstraint {
                number: r + 1,
                pair: rep.pair,
                tau: rep.tau,
                terms,
            }
        })
        .collect();
    Ok(ConstraintSystem { l, pairs })
}

impl ConstraintSystem {
    /// Each equation divided by its largest coefficient magnitude.
    pub fn normalized(&self) -> ConstraintSystem {
        let pairs = self
            .pairs
            .iter()
            .map(|p| {
                let big = p.terms.iter().map(|c| c.w.norm()).fold(0.0, f64::max);
                let terms = p
                    .terms
                    .iter()
                    .map(|c| Coefficient { w: c.w / big, ..*c })
                    .collect();
                PairConstraint { terms, ..p.clone() }
            })
            .collect();
        ConstraintSystem { l: self.l, pairs }
    }

    /// `pair r: p q` headers followed by `j j' re im` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.pairs {
            let _ = writeln!(out, "pair {}: {} {}", p.number, p.pair.p, p.pair.q);
            for c in &p.terms {
                let _ = writeln!(
                    out,
                    "{} {} {} {}",
                    c.j,
                    c.jp,
                    format_real(c.w.re),
                    format_real(c.w.im)
                );
            }
        }
        out
    }
}
