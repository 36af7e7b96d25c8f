//! Text formats for matrices, vectors and state dumps.
//!
//! Blank lines and lines starting with `#` are ignored everywhere. Indices are
//! 0-based. Errors carry 1-based line numbers of the offending input.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, SparseHermitianMatrix};
use crate::qstate::{QuantumState, RegisterLayout};

struct Line<'a> {
    number: usize,
    fields: Vec<&'a str>,
}

fn lines(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().filter_map(|(k, l)| {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            None
        } else {
            Some(Line {
                number: k + 1,
                fields: l.split_whitespace().collect(),
            })
        }
    })
}

impl Line<'_> {
    fn expect_len(&self, n: usize, what: &str) -> Result<()> {
        if self.fields.len() != n {
            return Err(Error::parse(
                self.number,
                format!(
                    "expected {what} ({n} fields), found {} fields",
                    self.fields.len()
                ),
            ));
        }
        Ok(())
    }

    fn get<T: FromStr>(&self, k: usize, what: &str) -> Result<T> {
        self.fields[k]
            .parse()
            .map_err(|_| Error::parse(self.number, format!("invalid {what} `{}`", self.fields[k])))
    }

    fn complex(&self, k: usize) -> Result<Complex64> {
        let re: f64 = self.get(k, "real part")?;
        let im: f64 = self.get(k + 1, "imaginary part")?;
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::parse(self.number, "non-finite value"));
        }
        Ok(Complex64::new(re, im))
    }

    fn index(&self, k: usize, bound: usize) -> Result<usize> {
        let i: usize = self.get(k, "index")?;
        if i >= bound {
            return Err(Error::parse(
                self.number,
                format!("index {i} out of range (dimension {bound})"),
            ));
        }
        Ok(i)
    }
}

fn header<'a>(it: &mut impl Iterator<Item = Line<'a>>) -> Result<Line<'a>> {
    it.next().ok_or_else(|| Error::parse(1, "empty input"))
}

/// Parses the sparse Hermitian format: `N s`, then `i j re im` with `i ≤ j`.
pub fn parse_sparse_hermitian(text: &str) -> Result<SparseHermitianMatrix> {
    let mut it = lines(text);
    let h = header(&mut it)?;
    h.expect_len(2, "header `N s`")?;
    let n: usize = h.get(0, "dimension")?;
    let s: usize = h.get(1, "sparsity")?;
    if n == 0 {
        return Err(Error::parse(h.number, "dimension must be positive"));
    }
    let mut entries = Vec::new();
    for l in it {
        l.expect_len(4, "entry `i j re im`")?;
        let i = l.index(0, n)?;
        let j = l.index(1, n)?;
        if i > j {
            return Err(Error::parse(
                l.number,
                format!("entry ({i}, {j}) is below the diagonal; give the upper triangle only"),
            ));
        }
        let z = l.complex(2)?;
        if i == j && z.im != 0.0 {
            return Err(Error::parse(l.number, "diagonal entry must be real"));
        }
        entries.push((i, j, z));
    }
    SparseHermitianMatrix::from_upper_entries(n, s, entries)
}

pub fn format_sparse_hermitian(a: &SparseHermitianMatrix) -> String {
    let mut s = format!("{} {}\n", a.dim(), a.sparsity());
    for (i, j, z) in a.upper_entries() {
        let _ = writeln!(s, "{i} {j} {:.16e} {:.16e}", z.re, z.im);
    }
    s
}

/// Parses the dense vector format: `N`, then `N` lines of `re im`.
pub fn parse_vector(text: &str) -> Result<Vec<Complex64>> {
    let mut it = lines(text);
    let h = header(&mut it)?;
    h.expect_len(1, "header `N`")?;
    let n: usize = h.get(0, "dimension")?;
    let mut v = Vec::with_capacity(n);
    let mut last = h.number;
    for l in it {
        if v.len() == n {
            return Err(Error::parse(l.number, format!("more than {n} entries")));
        }
        l.expect_len(2, "amplitude `re im`")?;
        v.push(l.complex(0)?);
        last = l.number;
    }
    if v.len() != n {
        return Err(Error::parse(
            last,
            format!("expected {n} entries, found {}", v.len()),
        ));
    }
    Ok(v)
}

pub fn format_vector(v: &[Complex64]) -> String {
    let mut s = format!("{}\n", v.len());
    for z in v {
        let _ = writeln!(s, "{:.16e} {:.16e}", z.re, z.im);
    }
    s
}

/// Parses a general `M × N` matrix: `M N`, then `i j re im`; absent entries
/// are zero, repeated entries are summed.
pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let mut it = lines(text);
    let h = header(&mut it)?;
    h.expect_len(2, "header `M N`")?;
    let m: usize = h.get(0, "row count")?;
    let n: usize = h.get(1, "column count")?;
    if m == 0 || n == 0 {
        return Err(Error::parse(h.number, "dimensions must be positive"));
    }
    let mut a = ComplexMatrix::zeros(m, n);
    for l in it {
        l.expect_len(4, "entry `i j re im`")?;
        let i = l.index(0, m)?;
        let j = l.index(1, n)?;
        a[(i, j)] += l.complex(2)?;
    }
    Ok(a)
}

pub fn format_matrix(a: &ComplexMatrix) -> String {
    let mut s = format!("{} {}\n", a.nrows(), a.ncols());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let z = a[(i, j)];
            if z != Complex64::new(0.0, 0.0) {
                let _ = writeln!(s, "{i} {j} {:.16e} {:.16e}", z.re, z.im);
            }
        }
    }
    s
}

/// Parses a state dump (`name:dim,...` header, then `re im` lines).
pub fn parse_state_dump(text: &str) -> Result<QuantumState> {
    let mut it = lines(text);
    let h = header(&mut it)?;
    h.expect_len(1, "layout header `name:dim,...`")?;
    let mut regs = Vec::new();
    for part in h.fields[0].split(',') {
        let (name, dim) = part
            .split_once(':')
            .ok_or_else(|| Error::parse(h.number, format!("register `{part}` lacks `:dim`")))?;
        let dim: usize = dim
            .parse()
            .map_err(|_| Error::parse(h.number, format!("invalid dimension in `{part}`")))?;
        regs.push((name.to_string(), dim));
    }
    let layout = RegisterLayout::new(regs).map_err(|e| Error::parse(h.number, e.to_string()))?;
    let mut amplitudes = Vec::with_capacity(layout.total_dim());
    let mut last = h.number;
    for l in it {
        l.expect_len(2, "amplitude `re im`")?;
        amplitudes.push(l.complex(0)?);
        last = l.number;
    }
    if amplitudes.len() != layout.total_dim() {
        return Err(Error::parse(
            last,
            format!(
                "layout has dimension {}, found {} amplitudes",
                layout.total_dim(),
                amplitudes.len()
            ),
        ));
    }
    QuantumState::new(layout, amplitudes).map_err(|e| Error::parse(last, e.to_string()))
}

/// Reads either a state dump or a dense vector (loaded, normalized, into a
/// register called `register`).
pub fn parse_state(text: &str, register: &str) -> Result<QuantumState> {
    let first = lines(text)
        .next()
        .ok_or_else(|| Error::parse(1, "empty input"))?;
    if first.fields.len() == 1 && first.fields[0].contains(':') {
        parse_state_dump(text)
    } else {
        let v = parse_vector(text)?;
        crate::qstate::prepare_amplitudes(register, &v)
            .map_err(|e| Error::parse(first.number, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sparse_round_trip() {
        let text = "# a 3x3 example\n3 2\n0 0 0.5 0\n0 1 0.25 -0.25\n\n2 2 -0.5 0\n";
        let a = parse_sparse_hermitian(text).unwrap();
        assert_eq!(a.entry(1, 0), c(0.25, 0.25));
        assert_eq!(a.entry(2, 2), c(-0.5, 0.0));
        let b = parse_sparse_hermitian(&format_sparse_hermitian(&a)).unwrap();
        assert_eq!(a.to_dense(), b.to_dense());
    }

    #[test]
    fn sparse_errors_are_line_numbered() {
        let err = parse_sparse_hermitian("2 2\n0 0 1 0\n1 0 0.1 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_sparse_hermitian("2 2\n0 1 x 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_sparse_hermitian("2 2\n0 5 1 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_sparse_hermitian("2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(matches!(
            parse_sparse_hermitian("1 1\n0 0 2 0\n"),
            Err(Error::NormExceeded { .. })
        ));
    }

    #[test]
    fn vector_round_trip() {
        let v = vec![c(0.1, -0.2), c(1.0 / 3.0, 0.0)];
        assert_eq!(parse_vector(&format_vector(&v)).unwrap(), v);
        assert!(matches!(
            parse_vector("3\n1 0\n0 0\n").unwrap_err(),
            Error::Parse { line: 3, .. }
        ));
        assert!(matches!(
            parse_vector("1\n1 0\n1 0\n").unwrap_err(),
            Error::Parse { line: 3, .. }
        ));
        assert!(matches!(
            parse_vector("1\nnan 0\n").unwrap_err(),
            Error::Parse { line: 2, .. }
        ));
    }

    #[test]
    fn rectangular_round_trip() {
        let a = parse_matrix("2 3\n0 2 1 0\n1 0 0 -1\n").unwrap();
        assert_eq!(a.shape(), (2, 3));
        assert_eq!(a[(1, 0)], c(0.0, -1.0));
        assert_eq!(parse_matrix(&format_matrix(&a)).unwrap(), a);
    }

    #[test]
    fn state_dump_round_trip() {
        let s = crate::qstate::prepare_amplitudes("b", &[c(3.0, 0.0), c(0.0, 4.0)]).unwrap();
        let back = parse_state_dump(&s.dump()).unwrap();
        assert_eq!(back, s);
        let v = parse_state("2\n3 0\n0 4\n", "b").unwrap();
        assert!(crate::qstate::state_distance(&v, &s).unwrap() < 1e-15);
        assert!(parse_state_dump("b:2\n1 0\n").is_err());
    }
}
