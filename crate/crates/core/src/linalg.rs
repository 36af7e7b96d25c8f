//! Complex linear algebra for the inversion laboratory.
//!
//! Everything here is dense: the eigendecomposition of the system matrix is the
//! exact stand-in for Hamiltonian simulation, so `e^{iAt}` is applied as
//! `V diag(e^{iλt}) V^†`. Sparsity is carried as metadata only.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Slack allowed above `‖A‖ = 1`.
pub const NORM_TOLERANCE: f64 = 1e-9;
/// Relative threshold below which the smallest singular value counts as zero.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;
/// Absolute tolerance for `A = A^†` on dense input.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A Hermitian matrix with at most `s` nonzeros per row and `‖A‖ ≤ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseHermitianMatrix {
    dim: usize,
    rows: Vec<Vec<(usize, Complex64)>>,
    sparsity: usize,
    spectral_norm: f64,
}

impl SparseHermitianMatrix {
    /// Builds the matrix from its upper triangle (`i ≤ j`); the lower triangle
    /// is implied by Hermiticity. Repeated coordinates are summed.
    pub fn from_upper_entries<I>(dim: usize, sparsity: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        if dim == 0 {
            return Err(Error::InvalidLayout(
                "matrix dimension must be at least 1".into(),
            ));
        }
        let mut rows: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); dim];
        for (i, j, v) in entries {
            if i >= dim || j >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: i.max(j) + 1,
                });
            }
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite);
            }
            let (i, j, v) = if i <= j { (i, j, v) } else { (j, i, v.conj()) };
            if i == j && v.im.abs() > HERMITIAN_TOLERANCE {
                return Err(Error::EmbeddingRequired {
                    deviation: 2.0 * v.im.abs(),
                });
            }
            *rows[i].entry(j).or_insert(ZERO) += v;
            if i != j {
                *rows[j].entry(i).or_insert(ZERO) += v.conj();
            }
        }
        // Diagonal entries are stored real.
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                r.into_iter()
                    .filter(|(_, v)| *v != ZERO)
                    .map(|(j, v)| {
                        if i == j {
                            (j, Complex64::new(v.re, 0.0))
                        } else {
                            (j, v)
                        }
                    })
                    .collect()
            })
            .collect();
        Self::from_rows(dim, sparsity, rows)
    }

    /// Builds the matrix from a dense Hermitian matrix. The sparsity is the
    /// largest row count of exact nonzeros.
    pub fn from_dense(dense: &ComplexMatrix) -> Result<Self> {
        let (dim, sparsity, rows) = Self::dense_rows(dense)?;
        Self::from_rows(dim, sparsity, rows)
    }

    /// Like [`Self::from_dense`], but divides by `max(1, ‖A‖)` instead of
    /// rejecting large norms. Returns the matrix and the applied scale.
    pub fn from_dense_scaled(dense: &ComplexMatrix) -> Result<(Self, f64)> {
        let (dim, sparsity, rows) = Self::dense_rows(dense)?;
        let norm = spectral_norm_hermitian(dense);
        if norm <= 1.0 + NORM_TOLERANCE {
            return Ok((Self::from_rows(dim, sparsity, rows)?, 1.0));
        }
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|(j, v)| (j, v / norm)).collect())
            .collect();
        Ok((Self::from_rows(dim, sparsity, rows)?, norm))
    }

    fn dense_rows(dense: &ComplexMatrix) -> Result<(usize, usize, Vec<Vec<(usize, Complex64)>>)> {
        if !dense.is_square() {
            return Err(Error::DimensionMismatch {
                expected: dense.nrows(),
                found: dense.ncols(),
            });
        }
        if dense.nrows() == 0 {
            return Err(Error::InvalidLayout(
                "matrix dimension must be at least 1".into(),
            ));
        }
        check_finite(dense)?;
        let deviation = hermitian_deviation(dense);
        if deviation > HERMITIAN_TOLERANCE {
            return Err(Error::EmbeddingRequired { deviation });
        }
        let dim = dense.nrows();
        let rows: Vec<Vec<(usize, Complex64)>> = (0..dim)
            .map(|i| {
                (0..dim)
                    .filter(|&j| dense[(i, j)] != ZERO)
                    .map(|j| (j, dense[(i, j)]))
                    .collect()
            })
            .collect();
        let sparsity = rows.iter().map(Vec::len).max().unwrap_or(0).max(1);
        Ok((dim, sparsity, rows))
    }

    fn from_rows(dim: usize, sparsity: usize, rows: Vec<Vec<(usize, Complex64)>>) -> Result<Self> {
        for (row, r) in rows.iter().enumerate() {
            if r.len() > sparsity {
                return Err(Error::SparsityExceeded {
                    row,
                    nonzeros: r.len(),
                    sparsity,
                });
            }
        }
        let mut m = SparseHermitianMatrix {
            dim,
            rows,
            sparsity,
            spectral_norm: 0.0,
        };
        let norm = spectral_norm_hermitian(&m.to_dense());
        if norm > 1.0 + NORM_TOLERANCE {
            return Err(Error::NormExceeded { norm });
        }
        m.spectral_norm = norm;
        Ok(m)
    }

    /// Diagonal matrix with the given real entries.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::from_upper_entries(
            values.len(),
            1,
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| (i, i, Complex64::new(v, 0.0))),
        )
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    /// `‖A‖`, clamped to 1 for inputs inside the accepted tolerance band.
    pub fn spectral_norm(&self) -> f64 {
        self.spectral_norm.min(1.0)
    }

    /// Nonzeros of row `i` as `(column, value)`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, Complex64)] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|k| self.rows[i][k].1)
            .unwrap_or(ZERO)
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim, self.dim);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Upper-triangle nonzeros `(i, j, value)` with `i ≤ j`, row-major.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, r)| {
            r.iter()
                .filter(move |&&(j, _)| j >= i)
                .map(move |&(j, v)| (i, j, v))
        })
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, a)| a * v[j]).sum())
            .collect()
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
    /// `β_j = ⟨u_j|v⟩` of a supplied vector, if any.
    pub coefficients: Option<Vec<Complex64>>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, j: usize) -> ComplexVector {
        self.eigenvectors.column(j).into_owned()
    }

    /// Coordinates of `v` in the eigenbasis, `V^† v`.
    pub fn to_eigenbasis(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| self.eigenvectors[(i, j)].conj() * v[i])
                    .sum()
            })
            .collect()
    }

    /// Inverse of [`Self::to_eigenbasis`], `V c`.
    pub fn from_eigenbasis(&self, c: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.eigenvectors[(i, j)] * c[j]).sum())
            .collect()
    }

    /// Attaches the expansion coefficients of `v`.
    pub fn with_coefficients(mut self, v: &[Complex64]) -> Self {
        self.coefficients = Some(self.to_eigenbasis(v));
        self
    }

    /// `Σ_j f(λ_j) |u_j⟩⟨u_j| v`.
    pub fn apply_function<F: Fn(f64) -> Complex64>(&self, f: F, v: &[Complex64]) -> Vec<Complex64> {
        let c: Vec<Complex64> = self
            .to_eigenbasis(v)
            .into_iter()
            .zip(&self.eigenvalues)
            .map(|(b, &l)| f(l) * b)
            .collect();
        self.from_eigenbasis(&c)
    }

    /// `Σ_j f(λ_j) |u_j⟩⟨u_j|` as a dense matrix.
    pub fn function_matrix<F: Fn(f64) -> Complex64>(&self, f: F) -> ComplexMatrix {
        let n = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for j in 0..n {
            let mut col = scaled.column_mut(j);
            col *= f(self.eigenvalues[j]);
        }
        &scaled * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.function_matrix(|l| Complex64::new(l, 0.0))
    }
}

/// Hermitian eigendecomposition of the system matrix.
pub fn eig_hermitian(a: &SparseHermitianMatrix) -> EigenDecomposition {
    eig_dense_unchecked(a.to_dense())
}

/// Hermitian eigendecomposition of a dense matrix; rejects non-Hermitian input.
pub fn eig_hermitian_dense(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    check_finite(a)?;
    let deviation = hermitian_deviation(a);
    if deviation > HERMITIAN_TOLERANCE {
        return Err(Error::EmbeddingRequired { deviation });
    }
    Ok(eig_dense_unchecked(a.clone()))
}

fn eig_dense_unchecked(mut a: ComplexMatrix) -> EigenDecomposition {
    // Symmetrize exactly so the solver sees a Hermitian input.
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));

    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        // Phase convention: the largest-magnitude component is real positive
        // (first such component on ties).
        let mut best = 0;
        for i in 1..n {
            if col[i].norm() > col[best].norm() * (1.0 + 1e-12) {
                best = i;
            }
        }
        let pivot = col[best];
        if pivot.norm() > 0.0 {
            let phase = pivot.conj() / pivot.norm();
            for x in col.iter_mut() {
                *x *= phase;
            }
        }
        vectors.set_column(dst, &col);
    }
    EigenDecomposition {
        eigenvalues: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
        eigenvectors: vectors,
        coefficients: None,
    }
}

/// `σ_max / σ_min` of the (Hermitian) system matrix.
pub fn condition_number(a: &SparseHermitianMatrix) -> Result<f64> {
    let eig = eig_hermitian(a);
    let singular: Vec<f64> = eig.eigenvalues.iter().map(|l| l.abs()).collect();
    ratio_of_extremes(&singular)
}

/// `σ_max / σ_min` of an arbitrary square matrix, via its singular values.
pub fn condition_number_dense(a: &ComplexMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    ratio_of_extremes(&singular_values(a))
}

fn ratio_of_extremes(singular: &[f64]) -> Result<f64> {
    let max = singular.iter().cloned().fold(0.0, f64::max);
    let min = singular.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 || min <= SINGULAR_TOLERANCE * max {
        return Err(Error::Singular { sigma_min: min });
    }
    Ok(max / min)
}

pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    let svd = SVD::new(a.clone(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().cloned().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// `e^{iAt}` computed as `Σ_j e^{iλ_j t} |u_j⟩⟨u_j|`.
pub fn mat_exp_unitary(a: &SparseHermitianMatrix, t: f64) -> ComplexMatrix {
    eig_hermitian(a).function_matrix(|l| Complex64::from_polar(1.0, l * t))
}

/// The Hermitian embedding `[[0, A], [A^†, 0]]` of an `M × N` matrix.
#[derive(Clone, Debug)]
pub struct HermitianEmbedding {
    /// The embedding divided by `scale`.
    pub matrix: SparseHermitianMatrix,
    /// `max(1, ‖A‖)`; the embedded spectrum is `±σ_j / scale`.
    pub scale: f64,
    pub rows: usize,
    pub cols: usize,
}

impl HermitianEmbedding {
    /// `(b, 0)`: the right-hand side placed in the first block.
    pub fn lift_rhs(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: b.len(),
            });
        }
        let mut v = b.to_vec();
        v.resize(self.rows + self.cols, ZERO);
        Ok(v)
    }

    /// The second block of a vector on the embedded space (the `x` part).
    pub fn solution_block<'a>(&self, y: &'a [Complex64]) -> &'a [Complex64] {
        &y[self.rows..]
    }
}

pub fn hermitian_embed(a: &ComplexMatrix) -> Result<HermitianEmbedding> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::InvalidLayout(
            "matrix must have at least one row and column".into(),
        ));
    }
    check_finite(a)?;
    let mut h = ComplexMatrix::zeros(m + n, m + n);
    h.view_mut((0, m), (m, n)).copy_from(a);
    h.view_mut((m, 0), (n, m)).copy_from(&a.adjoint());
    let (matrix, scale) = SparseHermitianMatrix::from_dense_scaled(&h)?;
    Ok(HermitianEmbedding {
        matrix,
        scale,
        rows: m,
        cols: n,
    })
}

pub fn check_finite(a: &ComplexMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn hermitian_deviation(a: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

fn spectral_norm_hermitian(a: &ComplexMatrix) -> f64 {
    eig_dense_unchecked(a.clone())
        .eigenvalues
        .iter()
        .fold(0.0, |m, l| m.max(l.abs()))
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// `max |(U^†U - I)_{ij}|`.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let n = u.ncols();
    max_abs_diff(&(u.adjoint() * u), &ComplexMatrix::identity(n, n))
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}
