//! Seeded random instances: Haar unitaries, Hermitian matrices with a
//! prescribed spectrum, random states. Used by scans, the CLI's default
//! instances and the test suites.

use nalgebra::QR;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, ComplexVector, SparseHermitianMatrix};

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-distributed unitary (QR of a complex Ginibre matrix with the phases of
/// `R`'s diagonal moved into `Q`).
pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let qr = QR::new(gaussian_matrix(n, n, rng));
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            let mut col = q.column_mut(j);
            col *= phase;
        }
    }
    q
}

/// `V diag(spectrum) V^†` for a Haar-random `V`.
pub fn hermitian_with_spectrum<R: Rng + ?Sized>(
    spectrum: &[f64],
    rng: &mut R,
) -> SparseHermitianMatrix {
    let n = spectrum.len();
    let v = unitary(n, rng);
    let d = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
        n,
        spectrum.iter().map(|&l| Complex64::new(l, 0.0)),
    ));
    let mut a = &v * d * v.adjoint();
    for i in 0..n {
        a[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            a[(j, i)] = a[(i, j)].conj();
        }
    }
    SparseHermitianMatrix::from_dense(&a).expect("spectrum within [-1, 1]")
}

/// Hermitian matrix with eigenvalues drawn uniformly from `[lo, hi]`.
pub fn hermitian_in_band<R: Rng + ?Sized>(
    n: usize,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> SparseHermitianMatrix {
    let spectrum: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    hermitian_with_spectrum(&spectrum, rng)
}

pub fn hermitian_with_norm_at_most_one<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> SparseHermitianMatrix {
    hermitian_in_band(n, -1.0, 1.0, rng)
}

/// Unit vector with i.i.d. complex Gaussian entries.
pub fn state_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..n).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}
