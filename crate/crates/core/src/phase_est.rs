//! Phase estimation with the sine-weighted clock state.
//!
//! The clock register `C` starts in `|Ψ₀⟩ = √(2/T) Σ_τ sin(π(τ+½)/T)|τ⟩`, the
//! system evolves under `e^{iAτt₀/T}` conditioned on `τ`, and the clock is
//! read in the Fourier basis. With [`QuantumState::inverse_qft`] as the
//! read-out transform the amplitude on `|k⟩|u_j⟩` is exactly `β_j α(δ, T)`
//! with `δ = λ_j t₀ − 2πk`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::EigenDecomposition;
use crate::qstate::{QuantumState, RegisterLayout};

pub const CLOCK: &str = "C";
pub const SYSTEM: &str = "sys";

/// Minimum ratio `T / t₀`.
pub const CLOCK_OVERSAMPLING: f64 = 16.0;

/// Below this `|sin((δ ± π)/2T)|` the closed form is replaced by the series.
const SINGULAR_GUARD: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseEstConfig {
    clock_dim: usize,
    t0: f64,
}

impl PhaseEstConfig {
    pub fn new(clock_dim: usize, t0: f64) -> Result<Self> {
        if clock_dim < 2 || !clock_dim.is_power_of_two() {
            return Err(Error::InvalidClock(format!(
                "T = {clock_dim} must be a power of two >= 2"
            )));
        }
        if !(t0.is_finite() && t0 > 0.0) {
            return Err(Error::InvalidClock(format!("t0 = {t0} must be positive")));
        }
        if (clock_dim as f64) < CLOCK_OVERSAMPLING * t0 {
            return Err(Error::InvalidClock(format!(
                "T = {clock_dim} is below 16·t0 = {}",
                CLOCK_OVERSAMPLING * t0
            )));
        }
        Ok(PhaseEstConfig { clock_dim, t0 })
    }

    /// Smallest power-of-two clock with `T ≥ 16·t₀`.
    pub fn with_t0(t0: f64) -> Result<Self> {
        if !(t0.is_finite() && t0 > 0.0) {
            return Err(Error::InvalidClock(format!("t0 = {t0} must be positive")));
        }
        let t = ((CLOCK_OVERSAMPLING * t0).ceil() as usize)
            .next_power_of_two()
            .max(2);
        Self::new(t, t0)
    }

    pub fn clock_dim(&self) -> usize {
        self.clock_dim
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Eigenvalue estimate attached to Fourier bin `k`.
    pub fn lambda_tilde(&self, k: usize) -> f64 {
        lambda_tilde(k, self.clock_dim, self.t0)
    }

    /// `λ̃_k` for every bin.
    pub fn lambda_grid(&self) -> Vec<f64> {
        (0..self.clock_dim).map(|k| self.lambda_tilde(k)).collect()
    }
}

/// `2πk/t₀` for `k ≤ T/2`, `2π(k−T)/t₀` above (bins past the midpoint read
/// negative eigenvalues).
pub fn lambda_tilde(k: usize, clock_dim: usize, t0: f64) -> f64 {
    let k = if k <= clock_dim / 2 {
        k as f64
    } else {
        k as f64 - clock_dim as f64
    };
    2.0 * PI * k / t0
}

pub fn psi0_amplitudes(clock_dim: usize) -> Result<Vec<f64>> {
    if clock_dim < 2 {
        return Err(Error::InvalidClock(format!(
            "|Psi0> needs T >= 2, got T = {clock_dim}"
        )));
    }
    let t = clock_dim as f64;
    let s = (2.0 / t).sqrt();
    Ok((0..clock_dim)
        .map(|tau| s * (PI * (tau as f64 + 0.5) / t).sin())
        .collect())
}

pub fn prepare_psi0(clock_dim: usize) -> Result<QuantumState> {
    let amps = psi0_amplitudes(clock_dim)?;
    QuantumState::new(
        RegisterLayout::single(CLOCK, clock_dim)?,
        amps.into_iter().map(|a| Complex64::new(a, 0.0)).collect(),
    )
}

/// `Σ_τ |τ⟩⟨τ| ⊗ e^{iAτt₀/T}` on the `C` and `sys` registers.
pub fn conditional_evolution(
    state: &QuantumState,
    eig: &EigenDecomposition,
    cfg: &PhaseEstConfig,
) -> Result<QuantumState> {
    evolve(state, eig, cfg.t0, 1.0)
}

/// As [`conditional_evolution`] with an arbitrary `t₀` (no clock-size check).
pub fn conditional_evolution_t0(
    state: &QuantumState,
    eig: &EigenDecomposition,
    t0: f64,
) -> Result<QuantumState> {
    evolve(state, eig, t0, 1.0)
}

/// Adjoint of [`conditional_evolution`].
pub fn conditional_evolution_adjoint(
    state: &QuantumState,
    eig: &EigenDecomposition,
    cfg: &PhaseEstConfig,
) -> Result<QuantumState> {
    evolve(state, eig, cfg.t0, -1.0)
}

fn evolve(
    state: &QuantumState,
    eig: &EigenDecomposition,
    t0: f64,
    sign: f64,
) -> Result<QuantumState> {
    let layout = state.layout();
    let clock = layout.split(CLOCK)?;
    let sys = layout.split(SYSTEM)?;
    if sys.dim != eig.dim() {
        return Err(Error::DimensionMismatch {
            expected: eig.dim(),
            found: sys.dim,
        });
    }
    let t = clock.dim as f64;
    let mut out = state.apply_to_register(SYSTEM, &eig.eigenvectors.adjoint())?;
    let amps = out.amplitudes_mut();
    for (flat, a) in amps.iter_mut().enumerate() {
        let tau = (flat / clock.inner) % clock.dim;
        let j = (flat / sys.inner) % sys.dim;
        *a *= Complex64::from_polar(1.0, sign * eig.eigenvalues[j] * t0 * tau as f64 / t);
    }
    out.apply_to_register(SYSTEM, &eig.eigenvectors)
}

/// Defining series `(√2/T) Σ_τ e^{iτδ/T} sin(π(τ+½)/T)`.
pub fn alpha_series(delta: f64, clock_dim: usize) -> Complex64 {
    let t = clock_dim as f64;
    let sum: Complex64 = (0..clock_dim)
        .map(|tau| {
            let tau = tau as f64;
            Complex64::from_polar((PI * (tau + 0.5) / t).sin(), tau * delta / t)
        })
        .sum();
    sum * (2f64.sqrt() / t)
}

/// Closed form of [`alpha_series`]:
/// `−e^{i(δ/2)(1−1/T)} √2 cos(δ/2) cos(δ/2T) sin(π/2T) / (T sin((δ+π)/2T) sin((δ−π)/2T))`.
pub fn alpha_closed_form(delta: f64, clock_dim: usize) -> Complex64 {
    let t = clock_dim as f64;
    let sp = ((delta + PI) / (2.0 * t)).sin();
    let sm = ((delta - PI) / (2.0 * t)).sin();
    if sp.abs() < SINGULAR_GUARD || sm.abs() < SINGULAR_GUARD {
        return alpha_series(delta, clock_dim);
    }
    let magnitude =
        2f64.sqrt() * (delta / 2.0).cos() * (delta / (2.0 * t)).cos() * (PI / (2.0 * t)).sin()
            / (t * sp * sm);
    -Complex64::from_polar(magnitude, 0.5 * delta * (1.0 - 1.0 / t))
}

/// `64π²/δ⁴`.
pub fn alpha_bound(delta: f64) -> f64 {
    64.0 * PI * PI / delta.powi(4)
}

/// `|Ψ₀⟩ ⊗ |b⟩`, conditional evolution, then the Fourier read-out of `C`.
pub fn phase_estimate(
    b: &QuantumState,
    eig: &EigenDecomposition,
    cfg: &PhaseEstConfig,
) -> Result<QuantumState> {
    let system = b
        .clone()
        .with_layout(RegisterLayout::single(SYSTEM, b.dim())?)?;
    let joint = prepare_psi0(cfg.clock_dim)?.tensor(&system)?;
    conditional_evolution(&joint, eig, cfg)?.inverse_qft(CLOCK)
}
