//! Line-oriented state files.
//!
//! ```text
//! dims 2 2
//! 5.0000000000000000e-1,0.0000000000000000e0 0.0000000000000000e0,0.0000000000000000e0 ...
//! ...
//! ```
//!
//! Line 1 is the header, then one line per matrix row with whitespace
//! separated `re,im` pairs written with 17 significant digits, which
//! round-trips every `f64` exactly.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;

use super::DensityMatrix;
use crate::matcore::{ComplexMatrix, Tolerances};
use crate::{Error, Result};

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn serialize_state(rho: &DensityMatrix) -> String {
    let d = rho.dim();
    let mut out = format!("dims {} {}\n", rho.m(), rho.n());
    for i in 0..d {
        for j in 0..d {
            let z = rho.matrix()[(i, j)];
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{},{}", format_real(z.re), format_real(z.im));
        }
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_state(text: &str) -> Result<DensityMatrix> {
    parse_state_with(text, &Tolerances::default())
}

pub fn parse_state_with(text: &str, tol: &Tolerances) -> Result<DensityMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (m, n) = match fields.as_slice() {
        ["dims", m, n] => {
            let m: usize = m
                .parse()
                .map_err(|_| parse_err(1, format!("bad dimension {m:?}")))?;
            let n: usize = n
                .parse()
                .map_err(|_| parse_err(1, format!("bad dimension {n:?}")))?;
            (m, n)
        }
        _ => return Err(parse_err(1, "expected header `dims <m> <n>`")),
    };
    if m < 2 || n < 2 {
        return Err(parse_err(
            1,
            format!("dimensions must both be at least 2, got {m}x{n}"),
        ));
    }
    let d = m * n;
    let mut matrix = ComplexMatrix::zeros(d, d);
    let mut last = 1;
    for row in 0..d {
        let (lineno, line) = lines.next().ok_or_else(|| {
            parse_err(
                last + 1,
                format!("unexpected end of file, expected {d} matrix rows"),
            )
        })?;
        last = lineno;
        let cells: Vec<&str> = line.split_whitespace().collect();
        if cells.len() != d {
            return Err(parse_err(
                lineno,
                format!("expected {d} entries, found {}", cells.len()),
            ));
        }
        for (col, cell) in cells.iter().enumerate() {
            let (re, im) = cell.split_once(',').ok_or_else(|| {
                parse_err(lineno, format!("entry {} is not a `re,im` pair", col + 1))
            })?;
            let re: f64 = re
                .parse()
                .map_err(|_| parse_err(lineno, format!("entry {}: bad number {re:?}", col + 1)))?;
            let im: f64 = im
                .parse()
                .map_err(|_| parse_err(lineno, format!("entry {}: bad number {im:?}", col + 1)))?;
            if !re.is_finite() || !im.is_finite() {
                return Err(parse_err(
                    lineno,
                    format!("entry {} is not finite", col + 1),
                ));
            }
            matrix[(row, col)] = C64::new(re, im);
        }
    }
    for (lineno, line) in lines {
        if !line.trim().is_empty() {
            return Err(parse_err(
                lineno,
                "unexpected content after the matrix rows",
            ));
        }
    }

    let scale = tol.hermitian * (1.0 + matrix.norm());
    for i in 0..d {
        for j in i..d {
            if (matrix[(i, j)] - matrix[(j, i)].conj()).norm() > scale {
                return Err(parse_err(
                    i + 2,
                    format!(
                        "entry ({}, {}) is not the conjugate of entry ({}, {})",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    ),
                ));
            }
        }
    }
    let trace = matrix.trace();
    if (trace.re - 1.0).abs() > tol.trace || trace.im.abs() > tol.trace {
        return Err(parse_err(1, format!("trace is {}, expected 1", trace.re)));
    }
    DensityMatrix::new_with(m, n, matrix, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolkit::states::{bound_2x4, random_density};
    use proptest::prelude::*;

    #[test]
    fn bound_state_round_trips() {
        let rho = bound_2x4();
        let text = serialize_state(&rho);
        assert!(text.starts_with("dims 2 4\n1.2500000000000000e-1,0.0000000000000000e0 "));
        let back = parse_state(&text).unwrap();
        assert_eq!(back, rho);
        assert_eq!(serialize_state(&back), text);
    }

    #[test]
    fn truncated_file_reports_line() {
        let text = serialize_state(&bound_2x4());
        let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        match parse_state(&cut) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_header_and_cells() {
        assert!(matches!(parse_state(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse_state("dim 2 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_state("dims 2 x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        let mut text = serialize_state(&bound_2x4());
        text = text.replacen("1.2500000000000000e-1,0.0000000000000000e0", "0.125;0", 1);
        assert!(matches!(
            parse_state(&text),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn trace_deviation_rejected() {
        let m = ComplexMatrix::identity(4, 4).scale(0.225);
        let mut text = String::from("dims 2 2\n");
        for i in 0..4 {
            let row: Vec<String> = (0..4)
                .map(|j| format!("{},{}", format_real(m[(i, j)].re), format_real(0.0)))
                .collect();
            text.push_str(&row.join(" "));
            text.push('\n');
        }
        match parse_state(&text) {
            Err(Error::Parse { line: 1, msg }) => assert!(msg.contains("trace")),
            other => panic!("expected trace error, got {other:?}"),
        }
    }

    #[test]
    fn non_hermitian_rejected_with_position() {
        let text = "dims 2 2\n\
            0.25,0 0.1,0 0,0 0,0\n\
            0,0 0.25,0 0,0 0,0\n\
            0,0 0,0 0.25,0 0,0\n\
            0,0 0,0 0,0 0.25,0\n";
        assert!(matches!(
            parse_state(text),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn random_states_round_trip(seed in 0u64..10_000, m in 2usize..4, n in 2usize..4) {
            let rho = random_density(m, n, m * n, seed).unwrap();
            let text = serialize_state(&rho);
            let back = parse_state(&text).unwrap();
            prop_assert_eq!(&back, &rho);
            prop_assert_eq!(serialize_state(&back), text);
        }
    }
}
