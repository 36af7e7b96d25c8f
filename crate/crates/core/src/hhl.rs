//! The inversion pipeline on the register layout `[C:T, sys:N, S:3]`.
//!
//! `U_invert` maps `|0⟩_C|b⟩|nothing⟩` through clock preparation, conditional
//! evolution, Fourier read-out, the flag rotation and the exact uncompute of
//! the first three steps. Exact comparands are built from the same filters
//! evaluated at the true eigenvalues.

use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::amplify::Amplifier;
use crate::error::{Error, Result};
use crate::filters::{
    rotate_flag, rotate_flag_adjoint, FilterMode, FilterSpec, FlagMap, FLAG, ILL, NOTHING, WELL,
};
use crate::linalg::{
    eig_hermitian, hermitian_embed, ComplexMatrix, EigenDecomposition, SparseHermitianMatrix,
};
use crate::phase_est::{
    conditional_evolution, conditional_evolution_adjoint, psi0_amplitudes, PhaseEstConfig, CLOCK,
    SYSTEM,
};
use crate::qstate::{prepare_amplitudes, state_distance, QuantumState, RegisterLayout};

/// Default `c_t` in `t₀ = c_t·κ/ε`.
pub const DEFAULT_T0_CONST: f64 = 10.0;

/// `g` on the ill-conditioned band; divides `P(ill)` into a weight estimate.
pub const ILL_AMPLITUDE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct HHLConfig {
    pub filter: FilterSpec,
    pub pe: PhaseEstConfig,
    pub epsilon: Option<f64>,
    pub t0_const: f64,
    /// Run amplitude amplification instead of plain post-selection.
    pub amplify: bool,
    pub seed: u64,
}

impl HHLConfig {
    /// `t₀ = c_t·κ/ε` with the default clock size.
    pub fn from_epsilon(filter: FilterSpec, epsilon: f64, t0_const: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Domain(format!(
                "epsilon = {epsilon} must be positive"
            )));
        }
        if !(t0_const.is_finite() && t0_const >= 1.0) {
            return Err(Error::Domain(format!(
                "t0 constant {t0_const} must be >= 1"
            )));
        }
        let t0 = t0_const * filter.kappa() / epsilon;
        Ok(HHLConfig {
            filter,
            pe: PhaseEstConfig::with_t0(t0)?,
            epsilon: Some(epsilon),
            t0_const,
            amplify: false,
            seed: 0,
        })
    }

    /// An explicit `t₀` with the default clock size.
    pub fn with_t0(filter: FilterSpec, t0: f64) -> Result<Self> {
        Self::with_clock(filter, PhaseEstConfig::with_t0(t0)?)
    }

    pub fn with_clock(filter: FilterSpec, pe: PhaseEstConfig) -> Result<Self> {
        Ok(HHLConfig {
            filter,
            pe,
            epsilon: None,
            t0_const: DEFAULT_T0_CONST,
            amplify: false,
            seed: 0,
        })
    }

    pub fn amplified(mut self, seed: u64) -> Self {
        self.amplify = true;
        self.seed = seed;
        self
    }

    pub fn t0(&self) -> f64 {
        self.pe.t0()
    }
}

pub fn full_layout(clock_dim: usize, n: usize) -> Result<RegisterLayout> {
    RegisterLayout::new([(CLOCK, clock_dim), (SYSTEM, n), (FLAG, 3)])
}

pub fn system_state(b: &[Complex64]) -> Result<QuantumState> {
    prepare_amplitudes(SYSTEM, b)
}

/// `|0⟩_C ⊗ |b⟩ ⊗ |nothing⟩`.
pub fn initial_state(b: &QuantumState, clock_dim: usize) -> Result<QuantumState> {
    let clock = QuantumState::basis(RegisterLayout::single(CLOCK, clock_dim)?, 0)?;
    let system = b
        .clone()
        .with_layout(RegisterLayout::single(SYSTEM, b.dim())?)?;
    let flag = QuantumState::basis(RegisterLayout::single(FLAG, 3)?, NOTHING)?;
    clock.tensor(&system)?.tensor(&flag)
}

/// Real reflection exchanging `|0⟩_C` and `|Ψ₀⟩` (its own inverse).
fn reflect_clock(state: &QuantumState) -> Result<QuantumState> {
    let t = state.layout().dim_of(CLOCK)?;
    let mut v = psi0_amplitudes(t)?;
    for x in &mut v {
        *x = -*x;
    }
    v[0] += 1.0;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let mut out = state.clone();
    out.for_each_fiber(CLOCK, |_, _, fiber| {
        let dot: Complex64 = v.iter().zip(fiber.iter()).map(|(a, z)| *a * z).sum();
        let s = dot * (2.0 / vv);
        for (a, z) in v.iter().zip(fiber.iter_mut()) {
            *z -= s * *a;
        }
    })?;
    Ok(out)
}

/// `U_invert` as an operator on the full space.
pub fn u_invert_op(
    state: &QuantumState,
    eig: &EigenDecomposition,
    pe: &PhaseEstConfig,
    map: &dyn FlagMap,
) -> Result<QuantumState> {
    u_invert_impl(state, eig, pe, map, false)
}

/// `U_invert^†`.
pub fn u_invert_adjoint_op(
    state: &QuantumState,
    eig: &EigenDecomposition,
    pe: &PhaseEstConfig,
    map: &dyn FlagMap,
) -> Result<QuantumState> {
    u_invert_impl(state, eig, pe, map, true)
}

fn u_invert_impl(
    state: &QuantumState,
    eig: &EigenDecomposition,
    pe: &PhaseEstConfig,
    map: &dyn FlagMap,
    adjoint: bool,
) -> Result<QuantumState> {
    if state.layout().dim_of(CLOCK)? != pe.clock_dim() {
        return Err(Error::DimensionMismatch {
            expected: pe.clock_dim(),
            found: state.layout().dim_of(CLOCK)?,
        });
    }
    let lambdas = pe.lambda_grid();
    let s = reflect_clock(state)?;
    let s = conditional_evolution(&s, eig, pe)?;
    let s = s.inverse_qft(CLOCK)?;
    let s = if adjoint {
        rotate_flag_adjoint(&s, map, &lambdas)?
    } else {
        rotate_flag(&s, map, &lambdas)?
    };
    let s = s.qft(CLOCK)?;
    let s = conditional_evolution_adjoint(&s, eig, pe)?;
    reflect_clock(&s)
}

/// `U_invert |0⟩|b⟩|nothing⟩` with the configured filter.
pub fn u_invert(
    b: &QuantumState,
    eig: &EigenDecomposition,
    cfg: &HHLConfig,
) -> Result<QuantumState> {
    u_invert_op(
        &initial_state(b, cfg.pe.clock_dim())?,
        eig,
        &cfg.pe,
        &cfg.filter,
    )
}

/// Conditions on `S = well`; returns the state and `p̃`.
pub fn postselect_well(state: &QuantumState) -> Result<(QuantumState, f64)> {
    state.postselect(FLAG, WELL)
}

/// Conditions on `S ∈ {well, ill}`.
pub fn postselect_flagged(state: &QuantumState) -> Result<(QuantumState, f64)> {
    state.postselect_any(FLAG, &[WELL, ILL])
}

/// Exact weights of `nothing`, `well`, `ill` for `b` under `map` at the true
/// eigenvalues.
pub fn exact_flag_weights(
    eig: &EigenDecomposition,
    b: &[Complex64],
    map: &dyn FlagMap,
) -> Result<[f64; 3]> {
    let beta = eig.to_eigenbasis(b);
    let norm: f64 = beta.iter().map(|z| z.norm_sqr()).sum();
    let mut w = [0.0; 3];
    for (bj, &l) in beta.iter().zip(&eig.eigenvalues) {
        let h = map.flag(l)?.as_array();
        for k in 0..3 {
            w[k] += bj.norm_sqr() * h[k] * h[k] / norm;
        }
    }
    Ok(w)
}

/// `|0⟩_C ⊗ Σ_j β_j |u_j⟩ ⊗ (c_k h_k(λ_j))_k` for flag weights `c`, unnormalized.
fn ideal_with_weights(
    eig: &EigenDecomposition,
    b: &[Complex64],
    map: &dyn FlagMap,
    clock_dim: usize,
    keep: [bool; 3],
) -> Result<QuantumState> {
    let n = eig.dim();
    let beta = eig.to_eigenbasis(b);
    let mut comps = vec![vec![Complex64::new(0.0, 0.0); n]; 3];
    for (j, (&bj, &l)) in beta.iter().zip(&eig.eigenvalues).enumerate() {
        let h = map.flag(l)?.as_array();
        for s in 0..3 {
            if keep[s] {
                comps[s][j] = bj * h[s];
            }
        }
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); clock_dim * n * 3];
    for (s, comp) in comps.iter().enumerate() {
        let v = eig.from_eigenbasis(comp);
        for (i, z) in v.into_iter().enumerate() {
            amps[i * 3 + s] = z;
        }
    }
    QuantumState::new_unnormalized(full_layout(clock_dim, n)?, amps)
}

/// `|0⟩_C Σ_j β_j |u_j⟩|h(λ_j)⟩`: the phase-estimation-free image of `|b⟩`.
pub fn ideal_state(
    eig: &EigenDecomposition,
    b: &[Complex64],
    map: &dyn FlagMap,
    clock_dim: usize,
) -> Result<QuantumState> {
    ideal_with_weights(eig, b, map, clock_dim, [true; 3])?.renormalized()
}

/// The exact state conditioned on `S ∈ {well, ill}`.
pub fn exact_flagged_state(
    eig: &EigenDecomposition,
    b: &[Complex64],
    map: &dyn FlagMap,
    clock_dim: usize,
) -> Result<QuantumState> {
    ideal_with_weights(eig, b, map, clock_dim, [false, true, true])?.renormalized()
}

/// The exact state conditioned on `S = well`: `|0⟩ ∝ Σ_j f(λ_j)β_j|u_j⟩ |well⟩`.
pub fn exact_well_state(
    eig: &EigenDecomposition,
    b: &[Complex64],
    map: &dyn FlagMap,
    clock_dim: usize,
) -> Result<QuantumState> {
    ideal_with_weights(eig, b, map, clock_dim, [false, true, false])?.renormalized()
}

/// System amplitudes of the `C = 0`, `S = flag` slice, normalized.
pub fn system_slice(state: &QuantumState, flag: usize) -> Result<Vec<Complex64>> {
    let n = state.layout().dim_of(SYSTEM)?;
    let v: Vec<Complex64> = (0..n).map(|i| state.amplitudes()[i * 3 + flag]).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(v.into_iter().map(|z| z / norm).collect())
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    /// `|x̃⟩`: the simulated state conditioned on `S = well`.
    pub solution: QuantumState,
    /// `|x⟩`: the exact comparand with the same filters.
    pub exact: QuantumState,
    /// Normalized system amplitudes of `|x̃⟩` on `C = 0`.
    pub solution_vector: Vec<Complex64>,
    pub exact_vector: Vec<Complex64>,
    /// `‖|x̃⟩ − |x⟩‖`.
    pub distance: f64,
    /// `‖x̃_sys − x_sys‖` between the normalized system vectors.
    pub distance_system: f64,
    /// `‖Ũ|b⟩ − U|b⟩‖` before any measurement.
    pub distance_unpostselected: f64,
    /// Distance after conditioning on `S ∈ {well, ill}`.
    pub distance_flagged: f64,
    /// `P(S = well)` of the simulated state.
    pub p_tilde: f64,
    /// `Σ_j |β_j|² f(λ_j)²`.
    pub p_exact: f64,
    pub p_tilde_flagged: f64,
    /// `Σ_j |β_j|² (f(λ_j)² + g(λ_j)²)`.
    pub p_exact_flagged: f64,
    /// Simulated `P(S = nothing, well, ill)`.
    pub weights: [f64; 3],
    pub exact_weights: [f64; 3],
    /// `P(ill)/g²` on the ill band: the weight of `b` on `|λ| ≤ 1/κ′`.
    pub ill_weight: f64,
    pub ill_weight_exact: f64,
    /// Grover iterates applied (0 without amplification).
    pub repetitions: usize,
    pub amplified: bool,
    pub amplification_succeeded: bool,
    /// Whether `b` has weight on negative eigenvalues (read from bins `k > T/2`).
    pub negative_spectrum: bool,
    pub t0: f64,
    pub clock_dim: usize,
    pub kappa: f64,
    pub wall_time: f64,
}

/// Runs the pipeline for Hermitian `A` and right-hand side `b`.
pub fn solve(a: &SparseHermitianMatrix, b: &[Complex64], cfg: &HHLConfig) -> Result<SolveReport> {
    if a.dim() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.len(),
        });
    }
    let eig = eig_hermitian(a);
    solve_eig(&eig, b, cfg, &cfg.filter)
}

/// [`solve`] with a precomputed eigendecomposition and an arbitrary flag map.
pub fn solve_eig(
    eig: &EigenDecomposition,
    b: &[Complex64],
    cfg: &HHLConfig,
    map: &dyn FlagMap,
) -> Result<SolveReport> {
    let start = Instant::now();
    let b_state = system_state(b)?;
    let b = b_state.amplitudes().to_vec();
    if let FilterMode::Simple { .. } = cfg.filter.mode() {
        let max = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let min = eig
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, l| m.min(l.abs()));
        if min <= crate::linalg::SINGULAR_TOLERANCE * max {
            return Err(Error::Singular { sigma_min: min });
        }
    }
    let t = cfg.pe.clock_dim();
    let simulated = u_invert_op(&initial_state(&b_state, t)?, eig, &cfg.pe, map)?;
    let weights = {
        let m = simulated.marginal(FLAG)?;
        [m[0], m[1], m[2]]
    };
    let exact_weights = exact_flag_weights(eig, &b, map)?;

    let ideal = ideal_state(eig, &b, map, t)?;
    let distance_unpostselected = state_distance(&simulated, &ideal)?;
    let (flagged, p_tilde_flagged) = postselect_flagged(&simulated)?;
    let distance_flagged = state_distance(&flagged, &exact_flagged_state(eig, &b, map, t)?)?;

    let (solution, p_tilde, repetitions, succeeded) = if cfg.amplify {
        let mut amp = Amplifier::new(eig, &cfg.pe, map, &b_state)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let budget = (4.0 * cfg.filter.kappa()).floor() as usize;
        let outcome = amp.run(budget, &mut rng)?;
        let (well, _) = postselect_well(&outcome.state)?;
        (
            well,
            amp.success_probability(),
            outcome.reflections,
            outcome.success,
        )
    } else {
        let (well, p) = postselect_well(&simulated)?;
        (well, p, 0, true)
    };
    let exact = exact_well_state(eig, &b, map, t)?;
    let distance = state_distance(&solution, &exact)?;
    let beta = eig.to_eigenbasis(&b);
    let negative_spectrum = beta
        .iter()
        .zip(&eig.eigenvalues)
        .any(|(bj, &l)| l < 0.0 && bj.norm_sqr() > 1e-24);
    let g2 = ILL_AMPLITUDE * ILL_AMPLITUDE;
    let solution_vector = system_slice(&solution, WELL)?;
    let exact_vector = system_slice(&exact, WELL)?;
    let distance_system = solution_vector
        .iter()
        .zip(&exact_vector)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(SolveReport {
        solution_vector,
        exact_vector,
        distance_system,
        solution,
        exact,
        distance,
        distance_unpostselected,
        distance_flagged,
        p_tilde,
        p_exact: exact_weights[WELL],
        p_tilde_flagged,
        p_exact_flagged: exact_weights[WELL] + exact_weights[ILL],
        weights,
        exact_weights,
        ill_weight: weights[ILL] / g2,
        ill_weight_exact: exact_weights[ILL] / g2,
        repetitions,
        amplified: cfg.amplify,
        amplification_succeeded: succeeded,
        negative_spectrum,
        t0: cfg.t0(),
        clock_dim: t,
        kappa: cfg.filter.kappa(),
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Non-post-selected output of `U_invert` with its flag weights.
#[derive(Clone, Debug)]
pub struct IllConditionedProfile {
    pub state: QuantumState,
    /// Simulated `P(nothing), P(well), P(ill)`.
    pub weights: [f64; 3],
    pub exact_weights: [f64; 3],
}

pub fn ill_conditioned_profile(
    a: &SparseHermitianMatrix,
    b: &[Complex64],
    cfg: &HHLConfig,
) -> Result<IllConditionedProfile> {
    let eig = eig_hermitian(a);
    let b_state = system_state(b)?;
    let state = u_invert(&b_state, &eig, cfg)?;
    let m = state.marginal(FLAG)?;
    Ok(IllConditionedProfile {
        weights: [m[0], m[1], m[2]],
        exact_weights: exact_flag_weights(&eig, b_state.amplitudes(), &cfg.filter)?,
        state,
    })
}

/// Report of [`solve_general`]; vectors are the `x` block of the embedding.
#[derive(Clone, Debug)]
pub struct GeneralSolveReport {
    pub report: SolveReport,
    pub rows: usize,
    pub cols: usize,
    /// `max(1, ‖A‖)`, the factor the embedding was divided by.
    pub scale: f64,
    pub solution_vector: Vec<Complex64>,
    pub exact_vector: Vec<Complex64>,
}

/// Solves `A x = b` for a general `M × N` matrix through `[[0, A], [A^†, 0]]`.
pub fn solve_general(
    a: &ComplexMatrix,
    b: &[Complex64],
    cfg: &HHLConfig,
) -> Result<GeneralSolveReport> {
    let emb = hermitian_embed(a)?;
    let lifted = emb.lift_rhs(b)?;
    let report = solve(&emb.matrix, &lifted, cfg)?;
    let block = |v: &[Complex64]| -> Result<Vec<Complex64>> {
        let x = emb.solution_block(v);
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(x.iter().map(|z| z / norm).collect())
    };
    Ok(GeneralSolveReport {
        solution_vector: block(&report.solution_vector)?,
        exact_vector: block(&report.exact_vector)?,
        rows: emb.rows,
        cols: emb.cols,
        scale: emb.scale,
        report,
    })
}
