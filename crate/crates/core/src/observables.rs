//! Estimators on solution states: expectation values, the SWAP test, stable
//! states of linear processes, `k`-copy polynomials and spectral functions.
//!
//! Every sampled estimate is reported next to the exact value computed from
//! amplitudes.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::filters::{FlagMap, FlagVector};
use crate::hhl::{solve_eig, solve_general, GeneralSolveReport, HHLConfig, SolveReport};
use crate::linalg::{
    eig_hermitian, eig_hermitian_dense, hermitian_deviation, singular_values, ComplexMatrix,
    ComplexVector, EigenDecomposition, SparseHermitianMatrix, HERMITIAN_TOLERANCE,
};
use crate::qstate::{sample_index, QuantumState, RegisterLayout};

/// Convergence tolerance of the spectral-radius iteration.
pub const SPECTRAL_RADIUS_TOLERANCE: f64 = 1e-6;

pub const MIN_SQUARINGS: usize = 24;

/// A Hermitian observable and the number of shots to spend on it.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSpec {
    pub matrix: ComplexMatrix,
    pub shots: usize,
}

impl ObservableSpec {
    pub fn new(matrix: ComplexMatrix, shots: usize) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        crate::linalg::check_finite(&matrix)?;
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOLERANCE {
            return Err(Error::EmbeddingRequired { deviation: dev });
        }
        Ok(ObservableSpec { matrix, shots })
    }

    /// `|1⟩⟨1|` on the most significant qubit: diagonal 1 on the upper half
    /// of the indices.
    pub fn first_qubit_projector(dim: usize, shots: usize) -> Result<Self> {
        if dim < 2 || !dim.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "first-qubit projector needs an even dimension, got {dim}"
            )));
        }
        let diag = ComplexVector::from_fn(dim, |i, _| {
            Complex64::new(if i >= dim / 2 { 1.0 } else { 0.0 }, 0.0)
        });
        Self::new(ComplexMatrix::from_diagonal(&diag), shots)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    /// Sample mean of the measured eigenvalues.
    pub estimate: f64,
    /// Standard error of the sample mean.
    pub stderr: f64,
    /// `⟨x|M|x⟩` from amplitudes.
    pub exact: f64,
    pub shots: usize,
}

impl Estimate {
    /// `|estimate − exact| / stderr`; zero when both agree exactly.
    pub fn z_score(&self) -> f64 {
        let diff = (self.estimate - self.exact).abs();
        if self.stderr > 0.0 {
            diff / self.stderr
        } else if diff <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

fn quadratic_form(m: &ComplexMatrix, x: &[Complex64]) -> f64 {
    let v = ComplexVector::from_column_slice(x);
    (v.adjoint() * m * &v)[(0, 0)].re
}

fn sample_eigenvalues<R: Rng + ?Sized>(
    values: &[f64],
    weights: &[f64],
    shots: usize,
    rng: &mut R,
) -> (f64, f64) {
    if shots == 0 {
        return (f64::NAN, f64::NAN);
    }
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..shots {
        let v = values[sample_index(weights, rng)];
        sum += v;
        sum_sq += v * v;
    }
    let n = shots as f64;
    let mean = sum / n;
    let var = if shots > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt())
}

/// Measures `M` in its eigenbasis `shots` times.
pub fn estimate_observable<R: Rng + ?Sized>(
    x: &QuantumState,
    spec: &ObservableSpec,
    rng: &mut R,
) -> Result<Estimate> {
    if spec.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: x.dim(),
        });
    }
    let norm = x.norm_sqr();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let eig = eig_hermitian_dense(&spec.matrix)?;
    let weights: Vec<f64> = eig
        .to_eigenbasis(x.amplitudes())
        .iter()
        .map(|z| z.norm_sqr() / norm)
        .collect();
    let (estimate, stderr) = sample_eigenvalues(&eig.eigenvalues, &weights, spec.shots, rng);
    Ok(Estimate {
        estimate,
        stderr,
        exact: quadratic_form(&spec.matrix, x.amplitudes()) / norm,
        shots: spec.shots,
    })
}

/// [`estimate_observable`] for `M` acting on one register of `x`.
pub fn estimate_register_observable<R: Rng + ?Sized>(
    x: &QuantumState,
    register: &str,
    spec: &ObservableSpec,
    rng: &mut R,
) -> Result<Estimate> {
    let dim = x.layout().dim_of(register)?;
    if spec.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: dim,
        });
    }
    let norm = x.norm_sqr();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let eig = eig_hermitian_dense(&spec.matrix)?;
    let rotated = x.apply_to_register(register, &eig.eigenvectors.adjoint())?;
    let weights: Vec<f64> = rotated
        .marginal(register)?
        .iter()
        .map(|p| p / norm)
        .collect();
    let exact = weights
        .iter()
        .zip(&eig.eigenvalues)
        .map(|(p, l)| p * l)
        .sum();
    let (estimate, stderr) = sample_eigenvalues(&eig.eigenvalues, &weights, spec.shots, rng);
    Ok(Estimate {
        estimate,
        stderr,
        exact,
        shots: spec.shots,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwapTestResult {
    /// `P(ancilla = 0)` from the simulated circuit.
    pub accept_probability: f64,
    /// `|⟨a|b⟩|²` from amplitudes.
    pub overlap_exact: f64,
    pub accepted: u64,
    pub shots: usize,
    /// `2·freq − 1`.
    pub estimate: f64,
    /// Standard error of `estimate`.
    pub stderr: f64,
}

/// SWAP test: `H` on an ancilla, controlled swap of `a` and `b`, `H`, measure
/// the ancilla. Outcome 0 counts as accept.
pub fn swap_test<R: Rng + ?Sized>(
    a: &QuantumState,
    b: &QuantumState,
    shots: usize,
    rng: &mut R,
) -> Result<SwapTestResult> {
    let n = a.dim();
    if b.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.dim(),
        });
    }
    let a = a.renormalized()?;
    let b = b.renormalized()?;
    let (av, bv) = (a.amplitudes(), b.amplitudes());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // After the first H: (|0⟩|a⟩|b⟩ + |1⟩|a⟩|b⟩)/√2 with index anc·n² + i·n + j.
    let mut psi = vec![Complex64::new(0.0, 0.0); 2 * n * n];
    for i in 0..n {
        for j in 0..n {
            let z = av[i] * bv[j] * h;
            psi[i * n + j] = z;
            psi[n * n + i * n + j] = z;
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            psi.swap(n * n + i * n + j, n * n + j * n + i);
        }
    }
    let (lo, hi) = psi.split_at_mut(n * n);
    for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
        let (s, d) = ((*x + *y) * h, (*x - *y) * h);
        *x = s;
        *y = d;
    }
    let accept_probability: f64 = psi[..n * n].iter().map(|z| z.norm_sqr()).sum();
    let overlap_exact = a.inner(&b)?.norm_sqr();
    let p = accept_probability.clamp(0.0, 1.0);
    let accepted = if shots == 0 {
        0
    } else {
        Binomial::new(shots as u64, p)
            .map_err(|e| Error::Domain(e.to_string()))?
            .sample(rng)
    };
    let freq = accepted as f64 / shots.max(1) as f64;
    let stderr = 2.0 * (freq * (1.0 - freq) / shots.max(1) as f64).sqrt();
    Ok(SwapTestResult {
        accept_probability,
        overlap_exact,
        accepted,
        shots,
        estimate: 2.0 * freq - 1.0,
        stderr,
    })
}

/// `ρ(A)` by repeated squaring, `‖A^{2^m}‖^{2^{−m}}`, until successive
/// values agree to [`SPECTRAL_RADIUS_TOLERANCE`]. The sequence is
/// nonincreasing but can stall, so at least [`MIN_SQUARINGS`] are taken.
pub fn spectral_radius(a: &ComplexMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    crate::linalg::check_finite(a)?;
    let mut m = a.clone();
    // ρ = exp(log_scale / k) · ‖M‖^{1/k} with M = A^k / e^{log_scale}.
    let mut log_scale = 0.0;
    let mut k = 1.0;
    let mut prev = f64::INFINITY;
    for step in 0..64 {
        let norm = singular_values(&m).first().copied().unwrap_or(0.0);
        if norm == 0.0 {
            return Ok(0.0);
        }
        let rho = ((log_scale + norm.ln()) / k).exp();
        if step >= MIN_SQUARINGS && (rho - prev).abs() <= SPECTRAL_RADIUS_TOLERANCE * rho.max(1.0) {
            return Ok(rho);
        }
        prev = rho;
        m /= Complex64::new(norm, 0.0);
        log_scale += norm.ln();
        m = &m * &m;
        log_scale *= 2.0;
        k *= 2.0;
    }
    Ok(prev)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StableState {
    /// Normalized `(I − A)^{−1} b`.
    pub state: Vec<Complex64>,
    pub spectral_radius: f64,
}

fn resolvent_matrix(a: &ComplexMatrix, b: &[Complex64]) -> Result<(ComplexMatrix, f64)> {
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let rho = spectral_radius(a)?;
    if rho >= 1.0 - SPECTRAL_RADIUS_TOLERANCE {
        return Err(Error::NoStableState {
            spectral_radius: rho,
        });
    }
    Ok((ComplexMatrix::identity(n, n) - a, rho))
}

/// The stable state `∝ (I − A)^{−1} b` of `x_t = A x_{t−1} + b`.
pub fn stable_state(a: &ComplexMatrix, b: &[Complex64]) -> Result<StableState> {
    let (m, rho) = resolvent_matrix(a, b)?;
    let x = m
        .lu()
        .solve(&ComplexVector::from_column_slice(b))
        .ok_or(Error::Singular { sigma_min: 0.0 })?;
    let norm = x.norm();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(StableState {
        state: x.iter().map(|z| z / norm).collect(),
        spectral_radius: rho,
    })
}

/// The stable state through the inversion pipeline on `(I − A)/‖I − A‖`.
pub fn stable_state_hhl(
    a: &ComplexMatrix,
    b: &[Complex64],
    cfg: &HHLConfig,
) -> Result<GeneralSolveReport> {
    let (m, _) = resolvent_matrix(a, b)?;
    let norm = singular_values(&m)[0];
    solve_general(&(m / Complex64::new(norm, 0.0)), b, cfg)
}

/// Expectation of `M` on `|x⟩^{⊗k}`.
pub fn estimate_poly2k<R: Rng + ?Sized>(
    x: &QuantumState,
    k: usize,
    big_m: &ObservableSpec,
    rng: &mut R,
) -> Result<Estimate> {
    if k == 0 {
        return Err(Error::Domain("need at least one copy".into()));
    }
    let expected = x
        .dim()
        .checked_pow(k as u32)
        .ok_or_else(|| Error::Domain("tensor power too large".into()))?;
    if big_m.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: big_m.dim(),
        });
    }
    let single = x
        .renormalized()?
        .with_layout(RegisterLayout::single("x0", x.dim())?)?;
    let mut copies = single.clone();
    for c in 1..k {
        let next = single
            .clone()
            .with_layout(RegisterLayout::single(&format!("x{c}"), x.dim())?)?;
        copies = copies.tensor(&next)?;
    }
    estimate_observable(&copies, big_m, rng)
}

/// Flag map `λ ↦ (·, f(clamp(λ, −1, 1))/scale, 0)`.
pub struct FunctionFlag<F> {
    f: F,
    scale: f64,
    clamped: bool,
}

impl<F: Fn(f64) -> f64> FunctionFlag<F> {
    /// `scale = max(1, max |f|)` over the given points, clamped to `[−1, 1]`.
    pub fn new(f: F, points: &[f64]) -> Result<Self> {
        Self::build(f, points, true)
    }

    /// Evaluates `f` on the raw grid values without clamping.
    pub fn unclamped(f: F, points: &[f64]) -> Result<Self> {
        Self::build(f, points, false)
    }

    fn build(f: F, points: &[f64], clamped: bool) -> Result<Self> {
        let mut scale = 1.0f64;
        for &l in points {
            let v = f(if clamped { l.clamp(-1.0, 1.0) } else { l });
            if !v.is_finite() {
                return Err(Error::Domain(format!("f({l}) is not finite")));
            }
            scale = scale.max(v.abs());
        }
        Ok(FunctionFlag { f, scale, clamped })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn value(&self, lambda: f64) -> f64 {
        let l = if self.clamped {
            lambda.clamp(-1.0, 1.0)
        } else {
            lambda
        };
        (self.f)(l) / self.scale
    }
}

impl<F: Fn(f64) -> f64> FlagMap for FunctionFlag<F> {
    fn flag(&self, lambda: f64) -> Result<FlagVector> {
        FlagVector::from_fg(lambda, self.value(lambda), 0.0)
    }
}

/// `f(A)|b⟩` by putting `f` in place of the inversion filter. The
/// configuration's filter only supplies `κ` for the amplification budget.
pub fn apply_matrix_function<F: Fn(f64) -> f64>(
    a: &SparseHermitianMatrix,
    b: &[Complex64],
    f: F,
    cfg: &HHLConfig,
) -> Result<SolveReport> {
    if a.dim() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.len(),
        });
    }
    let eig = eig_hermitian(a);
    let mut points = cfg.pe.lambda_grid();
    points.extend_from_slice(&eig.eigenvalues);
    let map = FunctionFlag::new(f, &points)?;
    apply_flag_function(&eig, b, &map, cfg)
}

/// [`apply_matrix_function`] with a prepared [`FunctionFlag`].
pub fn apply_flag_function<F: Fn(f64) -> f64>(
    eig: &EigenDecomposition,
    b: &[Complex64],
    map: &FunctionFlag<F>,
    cfg: &HHLConfig,
) -> Result<SolveReport> {
    let beta = eig.to_eigenbasis(b);
    let total: f64 = beta.iter().map(|z| z.norm_sqr()).sum();
    let weight: f64 = beta
        .iter()
        .zip(&eig.eigenvalues)
        .map(|(z, &l)| z.norm_sqr() * map.value(l).powi(2))
        .sum();
    if total == 0.0 {
        return Err(Error::ZeroVector);
    }
    if weight <= 1e-28 * total {
        return Err(Error::ZeroProbability {
            probability: weight / total,
        });
    }
    solve_eig(eig, b, cfg, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::FilterSpec;
    use crate::phase_est::SYSTEM;
    use crate::qstate::prepare_amplitudes;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn state(v: &[Complex64]) -> QuantumState {
        prepare_amplitudes(SYSTEM, v).unwrap()
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let g = random::gaussian_matrix(n, n, rng);
        (&g + g.adjoint()) * c(0.5, 0.0)
    }

    #[test]
    fn identity_observable_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = state(&random::state_vector(6, &mut rng));
        let spec = ObservableSpec::new(ComplexMatrix::identity(6, 6), 100).unwrap();
        let e = estimate_observable(&x, &spec, &mut rng).unwrap();
        assert!((e.estimate - 1.0).abs() < 1e-12);
        assert!((e.exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_projector_reads_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // |1⟩ ⊗ ψ on a qubit ⊗ 3-level system, M = |0⟩⟨0| ⊗ I.
        let psi = random::state_vector(3, &mut rng);
        let mut v = vec![c(0.0, 0.0); 3];
        v.extend_from_slice(&psi);
        let mut m = ComplexMatrix::zeros(6, 6);
        for i in 0..3 {
            m[(i, i)] = c(1.0, 0.0);
        }
        let e = estimate_observable(&state(&v), &ObservableSpec::new(m, 1000).unwrap(), &mut rng)
            .unwrap();
        assert!(e.estimate.abs() < 1e-12 && e.exact.abs() < 1e-12);
    }

    #[test]
    fn random_observable_within_three_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_hermitian(5, &mut rng);
        let v = random::state_vector(5, &mut rng);
        let direct = quadratic_form(&m, &v);
        let e = estimate_observable(
            &state(&v),
            &ObservableSpec::new(m, 10_000).unwrap(),
            &mut rng,
        )
        .unwrap();
        assert!((e.exact - direct).abs() < 1e-10);
        assert!(e.z_score() <= 3.0, "{e:?}");
    }

    #[test]
    fn register_observable_matches_full_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let layout = RegisterLayout::new([("a", 2), ("b", 3)]).unwrap();
        let x = QuantumState::new(layout, random::state_vector(6, &mut rng)).unwrap();
        let m = random_hermitian(3, &mut rng);
        let full = crate::linalg::kron(&ComplexMatrix::identity(2, 2), &m);
        let spec = ObservableSpec::new(m, 10).unwrap();
        let e = estimate_register_observable(&x, "b", &spec, &mut rng).unwrap();
        assert!((e.exact - quadratic_form(&full, x.amplitudes())).abs() < 1e-10);
    }

    #[test]
    fn observable_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = state(&random::state_vector(4, &mut rng));
        let spec = ObservableSpec::new(ComplexMatrix::identity(3, 3), 1).unwrap();
        assert!(matches!(
            estimate_observable(&x, &spec, &mut rng),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut m = ComplexMatrix::identity(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(ObservableSpec::new(m, 1).is_err());
        let p = ObservableSpec::first_qubit_projector(4, 1).unwrap();
        assert_eq!(p.matrix[(2, 2)], c(1.0, 0.0));
        assert_eq!(p.matrix[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn swap_test_accept_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in [2usize, 3, 5] {
            for _ in 0..20 {
                let a = state(&random::state_vector(n, &mut rng));
                let b = state(&random::state_vector(n, &mut rng));
                let r = swap_test(&a, &b, 0, &mut rng).unwrap();
                assert!((r.accept_probability - (1.0 + r.overlap_exact) / 2.0).abs() <= 1e-12);
            }
        }
        let a = state(&random::state_vector(4, &mut rng));
        let r = swap_test(&a, &a, 1000, &mut rng).unwrap();
        assert!((r.accept_probability - 1.0).abs() < 1e-12);
        assert_eq!(r.accepted, 1000);
        let r = swap_test(
            &state(&[c(1.0, 0.0), c(0.0, 0.0)]),
            &state(&[c(0.0, 0.0), c(0.0, 1.0)]),
            0,
            &mut rng,
        )
        .unwrap();
        assert!((r.accept_probability - 0.5).abs() < 1e-15);
    }

    #[test]
    fn swap_test_known_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = state(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let b = state(&[c(0.8, 0.0), c(0.0, 0.6), c(0.0, 0.0)]);
        let r = swap_test(&a, &b, 10_000, &mut rng).unwrap();
        assert!((r.overlap_exact - 0.64).abs() < 1e-12);
        assert!((r.estimate - 0.64).abs() <= 3.0 * r.stderr, "{r:?}");
    }

    #[test]
    fn spectral_radius_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = random::unitary(4, &mut rng);
        let d = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![
            c(0.9, 0.0),
            c(0.0, -0.5),
            c(0.3, 0.0),
            c(0.0, 0.0),
        ]));
        let a = &u * d * u.adjoint();
        assert!((spectral_radius(&a).unwrap() - 0.9).abs() < 1e-5);
        // Nilpotent with a large norm.
        let mut n = ComplexMatrix::zeros(3, 3);
        n[(0, 1)] = c(50.0, 0.0);
        n[(1, 2)] = c(50.0, 0.0);
        assert!(spectral_radius(&n).unwrap() < 1e-3);
    }

    #[test]
    fn stable_state_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = random::state_vector(4, &mut rng);
        for a in [
            ComplexMatrix::zeros(4, 4),
            ComplexMatrix::identity(4, 4) * c(0.5, 0.0),
        ] {
            let s = stable_state(&a, &b).unwrap();
            for (x, y) in s.state.iter().zip(&b) {
                assert!((x - y).norm() < 1e-12);
            }
        }
        assert!(matches!(
            stable_state(&ComplexMatrix::identity(4, 4), &b),
            Err(Error::NoStableState { .. })
        ));
    }

    #[test]
    fn stable_state_matches_fixed_point_iteration() {
        // Column-substochastic chain on 4 states with leakage.
        let rows = [
            [0.5, 0.2, 0.0, 0.1],
            [0.3, 0.4, 0.2, 0.0],
            [0.0, 0.2, 0.5, 0.3],
            [0.1, 0.0, 0.2, 0.4],
        ];
        let a = ComplexMatrix::from_fn(4, 4, |i, j| c(rows[i][j], 0.0));
        let b: Vec<Complex64> = [0.4, 0.3, 0.2, 0.1].iter().map(|&x| c(x, 0.0)).collect();
        let s = stable_state(&a, &b).unwrap();
        assert!(s.spectral_radius < 1.0);
        let bv = ComplexVector::from_vec(b.clone());
        let mut x = bv.clone();
        for _ in 0..10_000 {
            let next = &a * &x + &bv;
            let done = (&next - &x).norm() < 1e-15;
            x = next;
            if done {
                break;
            }
        }
        let x = &x / c(x.norm(), 0.0);
        for (p, q) in s.state.iter().zip(x.iter()) {
            assert!((p - q).norm() <= 1e-8);
        }
    }

    #[test]
    fn stable_state_through_pipeline() {
        let a = ComplexMatrix::from_fn(2, 2, |i, j| c(if i == j { 0.3 } else { 0.1 }, 0.0));
        let b = [c(1.0, 0.0), c(0.0, 0.0)];
        let exact = stable_state(&a, &b).unwrap();
        let cfg = HHLConfig::with_t0(FilterSpec::filtered(4.0).unwrap(), 400.0).unwrap();
        let r = stable_state_hhl(&a, &b, &cfg).unwrap();
        let overlap: Complex64 = r
            .solution_vector
            .iter()
            .zip(&exact.state)
            .map(|(p, q)| p.conj() * q)
            .sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-3, "{overlap}");
    }

    #[test]
    fn poly2k() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let v = random::state_vector(3, &mut rng);
        let x = state(&v);
        let m = random_hermitian(3, &mut rng);
        let spec = ObservableSpec::new(m, 500).unwrap();
        let one = estimate_poly2k(&x, 1, &spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let direct = estimate_observable(&x, &spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(one, direct);

        let swap = ComplexMatrix::from_fn(9, 9, |r, col| {
            let (i, j) = (r / 3, r % 3);
            c(if col == j * 3 + i { 1.0 } else { 0.0 }, 0.0)
        });
        let e =
            estimate_poly2k(&x, 2, &ObservableSpec::new(swap, 1000).unwrap(), &mut rng).unwrap();
        assert!((e.exact - 1.0).abs() < 1e-12);
        assert!((e.estimate - 1.0).abs() < 1e-12);

        let diag = ComplexMatrix::from_fn(9, 9, |r, col| {
            c(if r == col && r / 3 == r % 3 { 1.0 } else { 0.0 }, 0.0)
        });
        let e =
            estimate_poly2k(&x, 2, &ObservableSpec::new(diag, 10_000).unwrap(), &mut rng).unwrap();
        let quartic: f64 = v.iter().map(|z| z.norm_sqr().powi(2)).sum();
        assert!((e.exact - quartic).abs() < 1e-12);
        assert!(e.z_score() <= 3.0, "{e:?}");
    }

    fn function_cfg() -> HHLConfig {
        HHLConfig::with_t0(FilterSpec::filtered(4.0).unwrap(), 400.0).unwrap()
    }

    #[test]
    fn matrix_function_identity_and_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random::hermitian_in_band(4, -0.9, 0.9, &mut rng);
        let b = random::state_vector(4, &mut rng);
        let r = apply_matrix_function(&a, &b, |_| 1.0, &function_cfg()).unwrap();
        for (x, y) in r.solution_vector.iter().zip(&b) {
            assert!((x - y).norm() < 1e-9);
        }
        let r = apply_matrix_function(&a, &b, |l| l, &function_cfg()).unwrap();
        let ab = a.mul_vec(&b);
        let norm = ab.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let overlap: Complex64 = r
            .solution_vector
            .iter()
            .zip(&ab)
            .map(|(p, q)| p.conj() * q / norm)
            .sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-3, "{overlap}");
    }

    #[test]
    fn matrix_function_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = random::hermitian_with_norm_at_most_one(4, &mut rng);
        let b = random::state_vector(4, &mut rng);
        let cfg = function_cfg();
        let r = apply_matrix_function(&a, &b, |l| (-l).exp(), &cfg).unwrap();
        let eig = eig_hermitian(&a);
        let fx = eig.apply_function(|l| c((-l).exp(), 0.0), &b);
        let norm = fx.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let dist: f64 = r
            .solution_vector
            .iter()
            .zip(&fx)
            .map(|(p, q)| (p - q / norm).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(dist <= 4.0 / cfg.t0(), "{dist}");
    }

    #[test]
    fn matrix_function_with_filter_reproduces_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random::hermitian_in_band(4, 0.25, 1.0, &mut rng);
        let b = random::state_vector(4, &mut rng);
        let cfg = function_cfg();
        let spec = cfg.filter;
        let eig = eig_hermitian(&a);
        let map = FunctionFlag::unclamped(|l| spec.f(l), &cfg.pe.lambda_grid()).unwrap();
        assert_eq!(map.scale(), 1.0);
        let r = apply_flag_function(&eig, &b, &map, &cfg).unwrap();
        let s = crate::hhl::solve(&a, &b, &cfg).unwrap();
        // Same well amplitudes; only rounding in the other flag components differs.
        for (x, y) in r.solution_vector.iter().zip(&s.solution_vector) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn matrix_function_zero_weight() {
        let a = SparseHermitianMatrix::diagonal(&[0.5, -0.5]).unwrap();
        let b = [c(1.0, 0.0), c(0.0, 0.0)];
        assert!(matches!(
            apply_matrix_function(&a, &b, |l| if l > 0.0 { 0.0 } else { 1.0 }, &function_cfg()),
            Err(Error::ZeroProbability { .. })
        ));
    }
}
