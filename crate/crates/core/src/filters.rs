//! Filter functions and the conditional flag rotation.
//!
//! The flag register `S` has basis `|nothing⟩, |well⟩, |ill⟩` (indices 0, 1,
//! 2). For an eigenvalue estimate `λ` the rotation maps `|nothing⟩` to
//! `|h(λ)⟩ = √(1−f²−g²)|nothing⟩ + f|well⟩ + g|ill⟩`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::phase_est::CLOCK;
use crate::qstate::QuantumState;

pub const FLAG: &str = "S";
pub const NOTHING: usize = 0;
pub const WELL: usize = 1;
pub const ILL: usize = 2;

/// Slack allowed on `f² + g² ≤ 1` before a flag state is rejected.
const FLAG_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FilterMode {
    /// The smooth piecewise `f`, `g` with `κ′ = 2κ`.
    Filtered,
    /// `f = C/λ` (capped at 1), `g = 0`.
    Simple { c: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterSpec {
    kappa: f64,
    mode: FilterMode,
}

impl FilterSpec {
    pub fn filtered(kappa: f64) -> Result<Self> {
        check_kappa(kappa)?;
        Ok(FilterSpec {
            kappa,
            mode: FilterMode::Filtered,
        })
    }

    /// Simple mode; `c` defaults to `1/(2κ)` and may not exceed `1/κ`.
    pub fn simple(kappa: f64, c: Option<f64>) -> Result<Self> {
        check_kappa(kappa)?;
        let c = c.unwrap_or(1.0 / (2.0 * kappa));
        if !(c > 0.0 && c <= (1.0 / kappa) * (1.0 + 1e-12)) {
            return Err(Error::InvalidFilter(format!(
                "simple-mode constant C = {c} must lie in (0, 1/kappa]"
            )));
        }
        Ok(FilterSpec {
            kappa,
            mode: FilterMode::Simple { c },
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn kappa_prime(&self) -> f64 {
        2.0 * self.kappa
    }

    pub fn mode(&self) -> FilterMode {
        self.mode
    }

    /// Position inside the interpolation window `[1/κ′, 1/κ)`, scaled to `[0, π/2)`.
    fn window_angle(&self, a: f64) -> f64 {
        let lo = 1.0 / self.kappa_prime();
        let hi = 1.0 / self.kappa;
        0.5 * PI * (a - lo) / (hi - lo)
    }

    pub fn f(&self, lambda: f64) -> f64 {
        let a = lambda.abs();
        let sign = if lambda < 0.0 { -1.0 } else { 1.0 };
        match self.mode {
            FilterMode::Filtered => {
                let value = if a >= 1.0 / self.kappa {
                    1.0 / (2.0 * self.kappa * a)
                } else if a >= 1.0 / self.kappa_prime() {
                    0.5 * self.window_angle(a).sin()
                } else {
                    0.0
                };
                sign * value
            }
            FilterMode::Simple { c } => sign * if a > c { c / a } else { 1.0 },
        }
    }

    pub fn g(&self, lambda: f64) -> f64 {
        let a = lambda.abs();
        match self.mode {
            FilterMode::Filtered => {
                if a >= 1.0 / self.kappa {
                    0.0
                } else if a >= 1.0 / self.kappa_prime() {
                    0.5 * self.window_angle(a).cos()
                } else {
                    0.5
                }
            }
            FilterMode::Simple { .. } => 0.0,
        }
    }

    pub fn flag_state(&self, lambda: f64) -> Result<FlagVector> {
        FlagVector::from_fg(lambda, self.f(lambda), self.g(lambda))
    }

    /// `(π/2)·κ·|λ₁−λ₂| − ‖h(λ₁) − h(λ₂)‖`; nonnegative where the Lipschitz
    /// bound holds.
    pub fn lipschitz_margin(&self, l1: f64, l2: f64) -> Result<f64> {
        let d = self.flag_state(l1)?.distance(&self.flag_state(l2)?);
        Ok(0.5 * PI * self.kappa * (l1 - l2).abs() - d)
    }

    /// `c·(κ²/t₀²)·δ²·(f(λ)² + g(λ)²) − (|f(λ)−f(λ−δ/t₀)|² + |g(λ)−g(λ−δ/t₀)|²)`.
    pub fn shift_gap(&self, lambda: f64, delta: f64, t0: f64, c: f64) -> f64 {
        let shifted = lambda - delta / t0;
        let df = self.f(lambda) - self.f(shifted);
        let dg = self.g(lambda) - self.g(shifted);
        let (f, g) = (self.f(lambda), self.g(lambda));
        c * (self.kappa / t0).powi(2) * delta * delta * (f * f + g * g) - (df * df + dg * dg)
    }

    /// Central finite-difference estimate of `‖dh/dλ‖`.
    pub fn derivative_norm(&self, lambda: f64, step: f64) -> Result<f64> {
        Ok(self
            .flag_state(lambda + step)?
            .distance(&self.flag_state(lambda - step)?)
            / (2.0 * step))
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa.is_finite() && kappa >= 1.0) {
        return Err(Error::InvalidFilter(format!(
            "kappa = {kappa} must be >= 1"
        )));
    }
    Ok(())
}

/// Real amplitudes of `|h(λ)⟩` on `(nothing, well, ill)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlagVector {
    pub nothing: f64,
    pub well: f64,
    pub ill: f64,
}

impl FlagVector {
    pub fn from_fg(lambda: f64, f: f64, g: f64) -> Result<Self> {
        let weight = f * f + g * g;
        if !(f.is_finite() && g.is_finite()) || weight > 1.0 + FLAG_TOLERANCE {
            return Err(Error::FilterViolation { lambda, f, g });
        }
        Ok(FlagVector {
            nothing: (1.0 - weight).max(0.0).sqrt(),
            well: f,
            ill: g,
        })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.nothing, self.well, self.ill]
    }

    pub fn norm(&self) -> f64 {
        self.as_array().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &FlagVector) -> f64 {
        let (a, b) = (self.as_array(), other.as_array());
        (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()
    }

    /// Real orthogonal involution exchanging `|nothing⟩` and `|h⟩`.
    ///
    /// A Householder reflection through `|nothing⟩ − |h⟩`; the identity when
    /// `|h⟩ = |nothing⟩`.
    pub fn rotation(&self) -> [[f64; 3]; 3] {
        let h = self.as_array();
        let v = [1.0 - h[0], -h[1], -h[2]];
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                let id = if i == j { 1.0 } else { 0.0 };
                *x = if vv == 0.0 {
                    id
                } else {
                    id - 2.0 * v[i] * v[j] / vv
                };
            }
        }
        r
    }
}

/// Source of flag states for the conditional rotation.
pub trait FlagMap {
    fn flag(&self, lambda: f64) -> Result<FlagVector>;
}

impl FlagMap for FilterSpec {
    fn flag(&self, lambda: f64) -> Result<FlagVector> {
        self.flag_state(lambda)
    }
}

/// `Σ_k |k⟩⟨k| ⊗ R(λ̃_k)` on the `C` and `S` registers, `R(λ)|nothing⟩ = |h(λ)⟩`.
pub fn rotate_flag(
    state: &QuantumState,
    map: &dyn FlagMap,
    lambdas: &[f64],
) -> Result<QuantumState> {
    apply_rotations(state, map, lambdas, false)
}

/// Adjoint of [`rotate_flag`].
pub fn rotate_flag_adjoint(
    state: &QuantumState,
    map: &dyn FlagMap,
    lambdas: &[f64],
) -> Result<QuantumState> {
    apply_rotations(state, map, lambdas, true)
}

fn apply_rotations(
    state: &QuantumState,
    map: &dyn FlagMap,
    lambdas: &[f64],
    adjoint: bool,
) -> Result<QuantumState> {
    let layout = state.layout();
    let clock = layout.split(CLOCK)?;
    let flag = layout.split(FLAG)?;
    if flag.dim != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: flag.dim,
        });
    }
    if lambdas.len() != clock.dim {
        return Err(Error::DimensionMismatch {
            expected: clock.dim,
            found: lambdas.len(),
        });
    }
    let mut rotations = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let r = map.flag(l)?.rotation();
        rotations.push(if adjoint { transpose(r) } else { r });
    }
    let mut out = state.clone();
    out.for_each_fiber(FLAG, |o, i, fiber| {
        let k = (flag.index(o, 0, i) / clock.inner) % clock.dim;
        let r = &rotations[k];
        let v = [fiber[0], fiber[1], fiber[2]];
        for (row, x) in r.iter().zip(fiber.iter_mut()) {
            *x = v[0] * row[0] + v[1] * row[1] + v[2] * row[2];
        }
    })?;
    Ok(out)
}

fn transpose(r: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = r[j][i];
        }
    }
    t
}
