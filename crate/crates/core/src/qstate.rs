//! Statevectors over named registers.
//!
//! Amplitudes live in one flat array; the first register of the layout varies
//! slowest. For a layout `[C:T, sys:N, S:3]` the amplitude of `|τ⟩|i⟩|s⟩` is at
//! `(τ·N + i)·3 + s`. File dumps depend on this ordering.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Tolerance on `‖ψ‖ = 1` for states flagged normalized.
pub const NORM_TOLERANCE: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    registers: Vec<Register>,
}

/// A register viewed as the middle factor of `outer ⊗ dim ⊗ inner`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Split {
    pub(crate) outer: usize,
    pub(crate) dim: usize,
    pub(crate) inner: usize,
}

impl Split {
    pub(crate) fn index(&self, o: usize, k: usize, i: usize) -> usize {
        (o * self.dim + k) * self.inner + i
    }
}

impl RegisterLayout {
    pub fn new<I, S>(registers: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let registers: Vec<Register> = registers
            .into_iter()
            .map(|(name, dim)| Register {
                name: name.into(),
                dim,
            })
            .collect();
        if registers.is_empty() {
            return Err(Error::InvalidLayout(
                "layout needs at least one register".into(),
            ));
        }
        for (k, r) in registers.iter().enumerate() {
            if r.dim < 2 {
                return Err(Error::InvalidLayout(format!(
                    "register `{}` has dimension {} (< 2)",
                    r.name, r.dim
                )));
            }
            if r.name.is_empty() || r.name.contains([':', ',', ' ']) {
                return Err(Error::InvalidLayout(format!(
                    "invalid register name `{}`",
                    r.name
                )));
            }
            if registers[..k].iter().any(|o| o.name == r.name) {
                return Err(Error::InvalidLayout(format!(
                    "duplicate register `{}`",
                    r.name
                )));
            }
        }
        Ok(RegisterLayout { registers })
    }

    pub fn single(name: &str, dim: usize) -> Result<Self> {
        Self::new([(name, dim)])
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn total_dim(&self) -> usize {
        self.registers.iter().map(|r| r.dim).product()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn dim_of(&self, name: &str) -> Result<usize> {
        Ok(self.registers[self.position(name)?].dim)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.registers.iter().any(|r| r.name == name)
    }

    /// Layout with `other`'s registers appended after this one's.
    pub fn concat(&self, other: &RegisterLayout) -> Result<Self> {
        Self::new(
            self.registers
                .iter()
                .chain(&other.registers)
                .map(|r| (r.name.clone(), r.dim)),
        )
    }

    /// `name:dim,name:dim,...`
    pub fn header(&self) -> String {
        self.registers
            .iter()
            .map(|r| format!("{}:{}", r.name, r.dim))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub(crate) fn split(&self, name: &str) -> Result<Split> {
        let p = self.position(name)?;
        Ok(Split {
            outer: self.registers[..p].iter().map(|r| r.dim).product(),
            dim: self.registers[p].dim,
            inner: self.registers[p + 1..].iter().map(|r| r.dim).product(),
        })
    }
}

/// Complex amplitudes over a [`RegisterLayout`].
///
/// `normalized` is false for projections that have not been renormalized;
/// operations that need a unit vector check it.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    layout: RegisterLayout,
    amplitudes: Vec<Complex64>,
    normalized: bool,
}

impl QuantumState {
    /// A normalized state; fails if `‖amplitudes‖` is not 1 within tolerance.
    pub fn new(layout: RegisterLayout, amplitudes: Vec<Complex64>) -> Result<Self> {
        let state = Self::new_unnormalized(layout, amplitudes)?;
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Domain(format!("state has norm {norm}, expected 1")));
        }
        Ok(QuantumState {
            normalized: true,
            ..state
        })
    }

    /// A sub-normalized (or otherwise unnormalized) vector, flagged as such.
    pub fn new_unnormalized(layout: RegisterLayout, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.total_dim(),
                found: amplitudes.len(),
            });
        }
        if amplitudes
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite);
        }
        Ok(QuantumState {
            layout,
            amplitudes,
            normalized: false,
        })
    }

    /// Computational basis state `|index⟩` of the flat layout.
    pub fn basis(layout: RegisterLayout, index: usize) -> Result<Self> {
        let n = layout.total_dim();
        if index >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: index + 1,
            });
        }
        let mut amplitudes = vec![ZERO; n];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(QuantumState {
            layout,
            amplitudes,
            normalized: true,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn renormalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(QuantumState {
            layout: self.layout.clone(),
            amplitudes: self.amplitudes.iter().map(|z| z / n).collect(),
            normalized: true,
        })
    }

    /// Same amplitudes under a relabeled layout of equal total dimension.
    pub fn with_layout(self, layout: RegisterLayout) -> Result<Self> {
        if layout.total_dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: layout.total_dim(),
            });
        }
        Ok(QuantumState { layout, ..self })
    }

    /// `self ⊗ other`, registers concatenated.
    pub fn tensor(&self, other: &QuantumState) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| a * b));
        }
        Ok(QuantumState {
            layout,
            amplitudes,
            normalized: self.normalized && other.normalized,
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuantumState) -> Result<Complex64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Applies `matrix` (of the register's dimension) to one register.
    pub fn apply_to_register(&self, name: &str, matrix: &ComplexMatrix) -> Result<Self> {
        let sp = self.layout.split(name)?;
        if matrix.nrows() != sp.dim || matrix.ncols() != sp.dim {
            return Err(Error::DimensionMismatch {
                expected: sp.dim,
                found: matrix.nrows(),
            });
        }
        let mut out = self.clone();
        let mut fiber = vec![ZERO; sp.dim];
        for o in 0..sp.outer {
            for i in 0..sp.inner {
                for k in 0..sp.dim {
                    fiber[k] = self.amplitudes[sp.index(o, k, i)];
                }
                for r in 0..sp.dim {
                    out.amplitudes[sp.index(o, r, i)] =
                        (0..sp.dim).map(|k| matrix[(r, k)] * fiber[k]).sum();
                }
            }
        }
        Ok(out)
    }

    /// Runs `f(outer, inner, fiber)` on every fiber of the register, writing
    /// the fiber back afterwards.
    pub(crate) fn for_each_fiber<F>(&mut self, name: &str, mut f: F) -> Result<()>
    where
        F: FnMut(usize, usize, &mut [Complex64]),
    {
        let sp = self.layout.split(name)?;
        let mut fiber = vec![ZERO; sp.dim];
        for o in 0..sp.outer {
            for i in 0..sp.inner {
                for k in 0..sp.dim {
                    fiber[k] = self.amplitudes[sp.index(o, k, i)];
                }
                f(o, i, &mut fiber);
                for k in 0..sp.dim {
                    self.amplitudes[sp.index(o, k, i)] = fiber[k];
                }
            }
        }
        Ok(())
    }

    /// Quantum Fourier transform on `register`:
    /// `a_k ← T^{-1/2} Σ_τ e^{+2πikτ/T} a_τ`.
    pub fn qft(&self, register: &str) -> Result<Self> {
        self.fourier(register, true)
    }

    /// Adjoint of [`Self::qft`]: `a_k ← T^{-1/2} Σ_τ e^{-2πikτ/T} a_τ`.
    pub fn inverse_qft(&self, register: &str) -> Result<Self> {
        self.fourier(register, false)
    }

    fn fourier(&self, register: &str, positive: bool) -> Result<Self> {
        let sp = self.layout.split(register)?;
        let t = sp.dim;
        let mut planner = FftPlanner::<f64>::new();
        // rustfft's "inverse" transform carries the e^{+} sign.
        let fft = if positive {
            planner.plan_fft_inverse(t)
        } else {
            planner.plan_fft_forward(t)
        };
        let fibers = sp.outer * sp.inner;
        let mut buffer = vec![ZERO; fibers * t];
        for o in 0..sp.outer {
            for i in 0..sp.inner {
                let base = (o * sp.inner + i) * t;
                for k in 0..t {
                    buffer[base + k] = self.amplitudes[sp.index(o, k, i)];
                }
            }
        }
        fft.process(&mut buffer);
        let scale = 1.0 / (t as f64).sqrt();
        let mut out = self.clone();
        for o in 0..sp.outer {
            for i in 0..sp.inner {
                let base = (o * sp.inner + i) * t;
                for k in 0..t {
                    out.amplitudes[sp.index(o, k, i)] = buffer[base + k] * scale;
                }
            }
        }
        Ok(out)
    }

    /// Projection onto `register ∈ outcomes`, left unnormalized.
    pub fn project(&self, register: &str, outcomes: &[usize]) -> Result<Self> {
        let sp = self.layout.split(register)?;
        if let Some(&bad) = outcomes.iter().find(|&&k| k >= sp.dim) {
            return Err(Error::DimensionMismatch {
                expected: sp.dim,
                found: bad + 1,
            });
        }
        let mut keep = vec![false; sp.dim];
        for &k in outcomes {
            keep[k] = true;
        }
        let mut out = self.clone();
        for o in 0..sp.outer {
            for (k, &kept) in keep.iter().enumerate() {
                if !kept {
                    for i in 0..sp.inner {
                        out.amplitudes[sp.index(o, k, i)] = ZERO;
                    }
                }
            }
        }
        out.normalized = false;
        Ok(out)
    }

    /// Conditions on `register = outcome`; returns the renormalized state and
    /// the outcome probability.
    pub fn postselect(&self, register: &str, outcome: usize) -> Result<(Self, f64)> {
        self.postselect_any(register, &[outcome])
    }

    /// Conditions on `register ∈ outcomes`.
    pub fn postselect_any(&self, register: &str, outcomes: &[usize]) -> Result<(Self, f64)> {
        let projected = self.project(register, outcomes)?;
        let probability = projected.norm_sqr() / self.norm_sqr();
        if probability <= 0.0 {
            return Err(Error::ZeroProbability { probability });
        }
        Ok((projected.renormalized()?, probability))
    }

    /// Outcome distribution of measuring `register` (relative to `‖ψ‖²`).
    pub fn marginal(&self, register: &str) -> Result<Vec<f64>> {
        let sp = self.layout.split(register)?;
        let mut p = vec![0.0; sp.dim];
        for o in 0..sp.outer {
            for (k, pk) in p.iter_mut().enumerate() {
                for i in 0..sp.inner {
                    *pk += self.amplitudes[sp.index(o, k, i)].norm_sqr();
                }
            }
        }
        let total: f64 = p.iter().sum();
        if total > 0.0 {
            for x in &mut p {
                *x /= total;
            }
        }
        Ok(p)
    }

    /// Draws one measurement outcome of `register`.
    pub fn sample_measure<R: Rng + ?Sized>(&self, register: &str, rng: &mut R) -> Result<usize> {
        let p = self.marginal(register)?;
        Ok(sample_index(&p, rng))
    }

    /// Text dump: the layout header, then `re im` per amplitude in flat order.
    pub fn dump(&self) -> String {
        let mut s = self.layout.header();
        s.push('\n');
        for z in &self.amplitudes {
            let _ = writeln!(s, "{:.16e} {:.16e}", z.re, z.im);
        }
        s
    }
}

/// Draws an index from a (possibly unnormalized) nonnegative weight vector.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last = k;
            acc += w;
            if u < acc {
                return k;
            }
        }
    }
    last
}

/// Loads `v / ‖v‖` into a single register.
pub fn prepare_amplitudes(register: &str, v: &[Complex64]) -> Result<QuantumState> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if v.is_empty() || norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    if !norm.is_finite() {
        return Err(Error::NonFinite);
    }
    let layout = RegisterLayout::single(register, v.len())?;
    Ok(QuantumState {
        layout,
        amplitudes: v.iter().map(|z| z / norm).collect(),
        normalized: true,
    })
}

/// `‖|a⟩ - |b⟩‖ = √(2(1 - Re⟨a|b⟩))` for unit vectors.
///
/// Evaluated as the norm of the difference, which is the same quantity for
/// normalized inputs but keeps full precision when the states are close.
pub fn state_distance(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.layout != b.layout {
        return Err(Error::LayoutMismatch);
    }
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Dense matrix of [`QuantumState::qft`] on a `t`-dimensional register.
pub fn qft_matrix(t: usize) -> ComplexMatrix {
    let s = 1.0 / (t as f64).sqrt();
    ComplexMatrix::from_fn(t, t, |k, tau| {
        Complex64::from_polar(s, 2.0 * PI * ((k * tau) % t) as f64 / t as f64)
    })
}
