//! Amplitude amplification of the `S = well` branch.
//!
//! One iterate is `Q = U_invert · B · R_init · B^† · U_invert^† · R_succ`
//! with `R_succ = I − 2|well⟩⟨well|_S`, `R_init = I − 2|0⟩⟨0|` on the whole
//! register and `B` preparing `|b⟩` from `|0⟩` on the system register.
//! Rounds follow the exponential-search schedule: in round `r` a number of
//! iterates `j` is drawn uniformly from `[0, 2^r)`, the flag is measured, and
//! the search stops at the first `well` or when the iterate budget runs out.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::filters::{FlagMap, FLAG, WELL};
use crate::hhl::{initial_state, u_invert_adjoint_op, u_invert_op};
use crate::linalg::{ComplexMatrix, EigenDecomposition};
use crate::phase_est::{PhaseEstConfig, SYSTEM};
use crate::qstate::{sample_index, QuantumState, RegisterLayout};

/// Unitary `B` with `B|0⟩ = |b⟩`: a phase times a Householder reflection.
pub fn state_prep_matrix(b: &[Complex64]) -> Result<ComplexMatrix> {
    let n = b.len();
    let norm = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n == 0 || norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let phase = if b[0].norm() > 0.0 {
        b[0] / b[0].norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    // v = e0 − e^{-iφ} b/‖b‖; the reflection through v swaps e0 and e^{-iφ} b.
    let mut v: Vec<Complex64> = b.iter().map(|z| -z / (phase * norm)).collect();
    v[0] += 1.0;
    let vv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let mut h = ComplexMatrix::identity(n, n);
    if vv > 0.0 {
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] -= v[i] * v[j].conj() * (2.0 / vv);
            }
        }
    }
    Ok(h * phase)
}

/// `I − 2|well⟩⟨well|` on the flag register.
pub fn reflect_success(state: &QuantumState) -> Result<QuantumState> {
    let mut out = state.clone();
    out.for_each_fiber(FLAG, |_, _, fiber| fiber[WELL] = -fiber[WELL])?;
    Ok(out)
}

/// `I − 2|0⟩⟨0|` on the full register.
pub fn reflect_initial(state: &QuantumState) -> QuantumState {
    let mut out = state.clone();
    out.amplitudes_mut()[0] = -out.amplitudes()[0];
    out
}

#[derive(Clone, Debug)]
pub struct AmplifyOutcome {
    pub success: bool,
    /// Total iterates `Q` applied over all rounds.
    pub reflections: usize,
    pub rounds: usize,
    /// State of the last round before its flag measurement.
    pub state: QuantumState,
}

/// Caches `Q^j U_invert |0⟩|b⟩|nothing⟩` so repeated runs share the work.
pub struct Amplifier<'a> {
    eig: &'a EigenDecomposition,
    pe: &'a PhaseEstConfig,
    map: &'a dyn FlagMap,
    prep: ComplexMatrix,
    iterates: Vec<QuantumState>,
    success_probabilities: Vec<f64>,
}

impl<'a> Amplifier<'a> {
    pub fn new(
        eig: &'a EigenDecomposition,
        pe: &'a PhaseEstConfig,
        map: &'a dyn FlagMap,
        b: &QuantumState,
    ) -> Result<Self> {
        let prep = state_prep_matrix(b.amplitudes())?;
        let zero = QuantumState::basis(RegisterLayout::single(SYSTEM, b.dim())?, 0)?;
        let start = initial_state(&zero, pe.clock_dim())?.apply_to_register(SYSTEM, &prep)?;
        let first = u_invert_op(&start, eig, pe, map)?;
        let p = first.marginal(FLAG)?[WELL];
        if p <= 0.0 {
            return Err(Error::ZeroProbability { probability: p });
        }
        Ok(Amplifier {
            eig,
            pe,
            map,
            prep,
            iterates: vec![first],
            success_probabilities: vec![p],
        })
    }

    /// `p̃` of the un-amplified state.
    pub fn success_probability(&self) -> f64 {
        self.success_probabilities[0]
    }

    /// One application of `Q`.
    pub fn q_step(&self, state: &QuantumState) -> Result<QuantumState> {
        let s = reflect_success(state)?;
        let s = u_invert_adjoint_op(&s, self.eig, self.pe, self.map)?;
        let s = s.apply_to_register(SYSTEM, &self.prep.adjoint())?;
        let s = reflect_initial(&s);
        let s = s.apply_to_register(SYSTEM, &self.prep)?;
        u_invert_op(&s, self.eig, self.pe, self.map)
    }

    /// `Q^j U_invert|init⟩`.
    pub fn iterate(&mut self, j: usize) -> Result<&QuantumState> {
        while self.iterates.len() <= j {
            let next = self.q_step(self.iterates.last().expect("non-empty"))?;
            self.success_probabilities.push(next.marginal(FLAG)?[WELL]);
            self.iterates.push(next);
        }
        Ok(&self.iterates[j])
    }

    /// `P(well)` after `j` iterates.
    pub fn success_after(&mut self, j: usize) -> Result<f64> {
        self.iterate(j)?;
        Ok(self.success_probabilities[j])
    }

    /// Runs the schedule with at most `budget` iterates in total.
    pub fn run<R: Rng + ?Sized>(&mut self, budget: usize, rng: &mut R) -> Result<AmplifyOutcome> {
        let mut used = 0;
        let mut m = 1usize;
        let mut rounds = 0;
        let mut last = 0;
        while m <= budget.max(1) {
            let j = rng.random_range(0..m);
            if used + j > budget {
                break;
            }
            used += j;
            rounds += 1;
            last = j;
            let p = self.success_after(j)?;
            let outcome = sample_index(&[1.0 - p, p], rng);
            if outcome == 1 {
                return Ok(AmplifyOutcome {
                    success: true,
                    reflections: used,
                    rounds,
                    state: self.iterates[j].clone(),
                });
            }
            m *= 2;
        }
        Ok(AmplifyOutcome {
            success: false,
            reflections: used,
            rounds,
            state: self.iterates[last].clone(),
        })
    }
}
