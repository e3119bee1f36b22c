//! Command-line front end.
//!
//! Exit codes: 0 separable (or the command succeeded), 1 entangled,
//! 2 inconclusive, 64 usage, 65 bad data, 66 missing input, 74 other IO.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use super::io::{format_real, parse_state, serialize_state};
use super::states::{self, bound_2x4, bound_2x4_reference_basis};
use super::DensityMatrix;
use crate::criterion::{
    classify, ppt_min_eigenvalue, scaled_eigvecs, spectral_reports, ScaledEigvecs, Verdict,
};
use crate::decomposer::{single_pair_decomposition, verify_ensemble};
use crate::matcore::{ComplexMatrix, ComplexVector, Tolerances};
use crate::pairgen::{all_pair_operators, build_pair_operator, enumerate_pairs};
use crate::search::{emit_constraints, minimize, SearchConfig};
use crate::{Error, Result, C64};

pub const EXIT_SEPARABLE: i32 = 0;
pub const EXIT_ENTANGLED: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NO_INPUT: i32 = 66;
pub const EXIT_IO: i32 = 74;

#[derive(Parser, Debug)]
#[command(
    name = "sepcrit",
    version,
    about = "Separability checks for bipartite mixed states"
)]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a reference state file.
    Gen {
        #[command(subcommand)]
        state: GenState,
        /// Output file; stdout when absent.
        #[arg(short, long, global = true)]
        output: Option<PathBuf>,
    },
    /// Full pipeline: pair criterion, partial transpose, then search.
    Classify {
        file: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Per-pair singular values and `a` values.
    Spectrum {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Basis::Eigen)]
        basis: Basis,
    },
    /// Smallest eigenvalue of the partial transpose.
    Ppt { file: PathBuf },
    /// List the pair operators of an `m × n` system.
    Pairs { m: usize, n: usize },
    /// Ensemble making one pair parallel in every member.
    Decompose {
        file: PathBuf,
        /// 1-based pair number.
        #[arg(long)]
        pair: usize,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Joint search only.
    Search {
        file: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Print the polynomial constraint system for the ensemble matrix.
    EmitConstraints {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Basis::Eigen)]
        basis: Basis,
        /// Scale coefficients so the largest has modulus 1.
        #[arg(long)]
        normalize: bool,
    },
}

#[derive(Subcommand, Debug)]
enum GenState {
    #[command(name = "bound-2x4")]
    Bound2x4,
    Bell,
    Werner {
        #[arg(long)]
        p: f64,
    },
    Isotropic {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        f: f64,
    },
    Random {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    RandomSeparable {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        terms: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// `|1⟩ ⊗ |1⟩` on `m × n`.
    Product {
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Basis {
    /// Scaled eigenvectors from the eigensolver.
    Eigen,
    /// Fixed reference eigenvectors; built-in bound-2x4 state only.
    Paper,
}

#[derive(clap::Args, Debug)]
struct SearchArgs {
    /// Fixed ensemble size; otherwise l, 2l, 4l, ... up to (mn)².
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        let mut cfg = SearchConfig::default();
        cfg.k = self.k.or(cfg.k);
        cfg.restarts = self.restarts.unwrap_or(cfg.restarts);
        cfg.max_iters = self.max_iters.unwrap_or(cfg.max_iters);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg
    }
}

/// Runs one invocation; `args` includes the program name.
pub fn run_cli<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = out.write_all(text.as_bytes());
                0
            };
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            error_code(&e)
        }
    }
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => EXIT_NO_INPUT,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_DATA,
    }
}

fn load(path: &Path) -> Result<DensityMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_state(&text)
}

fn emit(out: &mut impl Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn emit_json(out: &mut impl Write, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    emit(out, &text)?;
    emit(out, "\n")
}

fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(a: &ComplexMatrix) -> Value {
    Value::Array(
        a.row_iter()
            .map(|row| Value::Array(row.iter().map(|&z| complex_json(z)).collect()))
            .collect(),
    )
}

fn vector_json(v: &ComplexVector) -> Value {
    Value::Array(v.iter().map(|&z| complex_json(z)).collect())
}

fn ensemble(rho: &DensityMatrix, basis: Basis, tol: &Tolerances) -> Result<ScaledEigvecs> {
    match basis {
        Basis::Eigen => scaled_eigvecs(rho, tol, None),
        Basis::Paper => {
            let reference = bound_2x4();
            if (rho.m(), rho.n()) != (2, 4)
                || (rho.matrix() - reference.matrix()).norm() > tol.hermitian
            {
                return Err(Error::domain(
                    "--basis paper is only defined for the built-in bound-2x4 state",
                ));
            }
            scaled_eigvecs(rho, tol, Some(&bound_2x4_reference_basis()))
        }
    }
}

fn dispatch(cli: &Cli, out: &mut impl Write) -> Result<i32> {
    let tol = Tolerances::default();
    match &cli.command {
        Command::Gen { state, output } => {
            let rho = generate(state)?;
            let text = serialize_state(&rho);
            match output {
                Some(path) => std::fs::write(path, text)?,
                None => emit(out, &text)?,
            }
            Ok(0)
        }
        Command::Classify { file, search } => {
            let rho = load(file)?;
            let report = classify(&rho, &search.config())?;
            let code = match report.verdict {
                Verdict::SeparableCertified(_) => EXIT_SEPARABLE,
                Verdict::Inconclusive { .. } => EXIT_INCONCLUSIVE,
                _ => EXIT_ENTANGLED,
            };
            let pairs: Vec<Value> = report
                .per_pair
                .iter()
                .map(|s| json!({"p": s.pair.p, "q": s.pair.q, "lambdas": s.lambdas, "a_value": s.a_value}))
                .collect();
            if cli.json {
                let mut v = json!({
                    "verdict": report.verdict.name(),
                    "m": report.m,
                    "n": report.n,
                    "rank": report.l,
                    "ppt_min_eigenvalue": report.ppt_min_eigenvalue,
                    "pairs": pairs,
                    "search": report.search.as_ref().map(|s| json!({
                        "best_residual": s.best_residual,
                        "k": s.k,
                        "restarts": s.restarts_used,
                    })),
                });
                match &report.verdict {
                    Verdict::EntangledByPairCriterion(r) => v["violated_pair"] = json!(r),
                    Verdict::SeparableCertified(c) => v["certificate_terms"] = json!(c.terms.len()),
                    _ => {}
                }
                emit_json(out, &v)?;
            } else {
                let mut s = format!("state {}x{}, rank {}\n", report.m, report.n, report.l);
                s.push_str(&pair_table(&report.per_pair));
                let _ = writeln!(
                    s,
                    "ppt min eigenvalue {}",
                    format_real(report.ppt_min_eigenvalue)
                );
                if let Some(found) = &report.search {
                    let _ = writeln!(
                        s,
                        "search: best residual {} at k={} after {} restarts",
                        format_real(found.best_residual),
                        found.k,
                        found.restarts_used
                    );
                }
                let verdict = match &report.verdict {
                    Verdict::EntangledByPairCriterion(r) => {
                        format!("EntangledByPairCriterion (pair {r})")
                    }
                    Verdict::SeparableCertified(c) => {
                        format!("SeparableCertified ({} product terms)", c.terms.len())
                    }
                    other => other.name().to_string(),
                };
                let _ = writeln!(s, "verdict: {verdict}");
                emit(out, &s)?;
            }
            Ok(code)
        }
        Command::Spectrum { file, basis } => {
            let rho = load(file)?;
            let x = ensemble(&rho, *basis, &tol)?;
            let ops = all_pair_operators(rho.m(), rho.n())?;
            let reports = spectral_reports(&x, &ops)?;
            if cli.json {
                let pairs: Vec<Value> = reports
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        json!({
                            "number": i + 1,
                            "p": s.pair.p,
                            "q": s.pair.q,
                            "lambdas": s.lambdas,
                            "l_prime": s.l_prime,
                            "a_value": s.a_value,
                            "tau": matrix_json(&s.tau),
                        })
                    })
                    .collect();
                emit_json(
                    out,
                    &json!({"m": rho.m(), "n": rho.n(), "rank": x.l(), "pairs": pairs}),
                )?;
            } else {
                emit(out, &pair_table(&reports))?;
            }
            Ok(0)
        }
        Command::Ppt { file } => {
            let rho = load(file)?;
            let min = ppt_min_eigenvalue(&rho)?;
            let negative = min < -tol.boundary;
            if cli.json {
                emit_json(
                    out,
                    &json!({"ppt_min_eigenvalue": min, "negative": negative}),
                )?;
            } else {
                emit(out, &format!("ppt min eigenvalue {}\n", format_real(min)))?;
            }
            Ok(if negative { EXIT_ENTANGLED } else { 0 })
        }
        Command::Pairs { m, n } => {
            let pairs = enumerate_pairs(*m, *n)?;
            let mut listing = Vec::new();
            let mut s = String::new();
            for (i, pair) in pairs.iter().enumerate() {
                let b = build_pair_operator(*m, *n, *pair)?;
                let entries: Vec<Value> = b
                    .entries
                    .iter()
                    .map(|e| json!({"row": e.row, "col": e.col, "value": e.value}))
                    .collect();
                listing
                    .push(json!({"number": i + 1, "p": pair.p, "q": pair.q, "entries": entries}));
                let cells: Vec<String> = b
                    .entries
                    .iter()
                    .map(|e| format!("({},{})={:+}", e.row, e.col, e.value))
                    .collect();
                let _ = writeln!(
                    s,
                    "{:>3}  p={} q={}  {}",
                    i + 1,
                    pair.p,
                    pair.q,
                    cells.join(" ")
                );
            }
            if cli.json {
                emit_json(out, &json!({"m": m, "n": n, "pairs": listing}))?;
            } else {
                emit(out, &s)?;
            }
            Ok(0)
        }
        Command::Decompose { file, pair, k } => {
            let rho = load(file)?;
            let pairs = enumerate_pairs(rho.m(), rho.n())?;
            let index = pair
                .checked_sub(1)
                .and_then(|i| pairs.get(i).copied())
                .ok_or_else(|| {
                    Error::domain(format!("pair must lie in 1..={}, got {pair}", pairs.len()))
                })?;
            let e = match single_pair_decomposition(&rho, index, *k, &tol) {
                Err(Error::CriterionFailure { pair, a_value }) => {
                    let msg = format!(
                        "pair {pair} violates the criterion: a = {}",
                        format_real(a_value)
                    );
                    if cli.json {
                        emit_json(
                            out,
                            &json!({"pair": pair, "a_value": a_value, "members": Value::Null}),
                        )?;
                    } else {
                        emit(out, &format!("{msg}\n"))?;
                    }
                    return Ok(EXIT_ENTANGLED);
                }
                other => other?,
            };
            let b = build_pair_operator(rho.m(), rho.n(), index)?;
            let rep = verify_ensemble(&e, &rho, std::slice::from_ref(&b));
            if cli.json {
                emit_json(
                    out,
                    &json!({
                        "pair": pair,
                        "members": e.members.iter().map(vector_json).collect::<Vec<_>>(),
                        "reconstruction_error": rep.reconstruction_error,
                        "max_pair_residual": rep.max_pair_residual,
                    }),
                )?;
            } else {
                let mut s = format!(
                    "{} members for pair {pair} (p={} q={})\n",
                    e.members.len(),
                    index.p,
                    index.q
                );
                for (i, z) in e.members.iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "{:>3}  weight {}  residual {}",
                        i + 1,
                        format_real(z.norm_squared()),
                        format_real(b.form(z, z)?.norm())
                    );
                }
                let _ = writeln!(
                    s,
                    "reconstruction error {}",
                    format_real(rep.reconstruction_error)
                );
                emit(out, &s)?;
            }
            Ok(0)
        }
        Command::Search { file, search } => {
            let rho = load(file)?;
            let found = minimize(&rho, &search.config())?;
            let certified = found
                .certificate
                .as_ref()
                .is_some_and(|c| c.reconstruction_error(rho.matrix()) <= tol.certificate);
            if cli.json {
                let terms: Option<Vec<Value>> = found.certificate.as_ref().map(|c| {
                    c.terms
                        .iter()
                        .map(|t| json!({"weight": t.weight, "alpha": vector_json(&t.alpha), "beta": vector_json(&t.beta)}))
                        .collect()
                });
                emit_json(
                    out,
                    &json!({
                        "best_residual": found.best_residual,
                        "k": found.k,
                        "restarts": found.restarts_used,
                        "iterations": found.iterations_used,
                        "certificate": terms,
                    }),
                )?;
            } else {
                let mut s = format!(
                    "best residual {} at k={} ({} restarts, {} iterations)\n",
                    format_real(found.best_residual),
                    found.k,
                    found.restarts_used,
                    found.iterations_used
                );
                if let Some(c) = &found.certificate {
                    let _ = writeln!(s, "certificate with {} product terms", c.terms.len());
                }
                emit(out, &s)?;
            }
            Ok(if certified {
                EXIT_SEPARABLE
            } else {
                EXIT_INCONCLUSIVE
            })
        }
        Command::EmitConstraints {
            file,
            basis,
            normalize,
        } => {
            let rho = load(file)?;
            let x = ensemble(&rho, *basis, &tol)?;
            let ops = all_pair_operators(rho.m(), rho.n())?;
            let mut system = emit_constraints(&x, &ops)?;
            if *normalize {
                system = system.normalized();
            }
            if cli.json {
                let pairs: Vec<Value> = system
                    .pairs
                    .iter()
                    .map(|c| {
                        json!({
                            "number": c.number,
                            "p": c.pair.p,
                            "q": c.pair.q,
                            "terms": c.terms.iter().map(|t| json!({"j": t.j, "jp": t.jp, "w": complex_json(t.w)})).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                emit_json(out, &json!({"l": system.l, "pairs": pairs}))?;
            } else {
                emit(out, &system.to_text())?;
            }
            Ok(0)
        }
    }
}

fn pair_table(reports: &[crate::criterion::SpectralReport]) -> String {
    let mut s = String::from("  r    p  q  a                        lambdas\n");
    for (i, r) in reports.iter().enumerate() {
        let lambdas: Vec<String> = r.lambdas.iter().map(|&x| format_real(x)).collect();
        let _ = writeln!(
            s,
            "{:>3}  {:>3} {:>2}  {:<24} {}",
            i + 1,
            r.pair.p,
            r.pair.q,
            format_real(r.a_value),
            lambdas.join(" ")
        );
    }
    s
}

fn generate(state: &GenState) -> Result<DensityMatrix> {
    match *state {
        GenState::Bound2x4 => Ok(bound_2x4()),
        GenState::Bell => Ok(states::bell()),
        GenState::Werner { p } => states::werner_2x2(p),
        GenState::Isotropic { d, f } => states::isotropic(d, f),
        GenState::Random { m, n, rank, seed } => states::random_density(m, n, rank, seed),
        GenState::RandomSeparable { m, n, terms, seed } => {
            states::random_separable(m, n, terms, seed)
        }
        GenState::Product { m, n } => {
            let unit = |d: usize| {
                let mut v = ComplexVector::zeros(d);
                if d > 0 {
                    v[0] = C64::new(1.0, 0.0);
                }
                v
            };
            states::product_pure(&unit(m), &unit(n))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_cli(
            std::iter::once("sepcrit").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(&[]).0, EXIT_USAGE);
        assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run(&["pairs", "2"]).0, EXIT_USAGE);
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("classify"));
    }

    #[test]
    fn pairs_listing() {
        let (code, out, _) = run(&["pairs", "4", "4"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 9);
        assert!(out.starts_with("  1  p=2 q=2  "));
        let (code, out, _) = run(&["--json", "pairs", "2", "2"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["pairs"].as_array().unwrap().len(), 1);
        assert_eq!(run(&["pairs", "1", "4"]).0, EXIT_DATA);
    }

    #[test]
    fn gen_writes_canonical_text() {
        let (code, out, _) = run(&["gen", "bound-2x4"]);
        assert_eq!(code, 0);
        assert_eq!(out, serialize_state(&bound_2x4()));
        assert_eq!(run(&["gen", "werner", "--p", "2"]).0, EXIT_DATA);
    }

    #[test]
    fn missing_file() {
        assert_eq!(run(&["ppt", "/nonexistent/state.txt"]).0, EXIT_NO_INPUT);
    }
}
