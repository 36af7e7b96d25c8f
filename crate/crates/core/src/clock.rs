//! Circuit-to-inversion reduction with a `3T`-state clock.
//!
//! For gates `U_1 … U_T` on `n` qubits the clock unitary is
//!
//! ```text
//! U = Σ_{t=1}^{T}   |t+1⟩⟨t| ⊗ U_t
//!   + Σ_{t=T+1}^{2T} |t+1⟩⟨t| ⊗ I
//!   + Σ_{t=2T+1}^{3T} |t+1 mod 3T⟩⟨t| ⊗ U_{3T+1−t}^†
//! ```
//!
//! Clock states `|1⟩ … |3T⟩` are stored as indices `0 … 3T−1`, clock-major:
//! the basis state `|t⟩|x⟩` sits at `(t−1)·2ⁿ + x`. Qubit 0 is the most
//! significant bit of `x`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{condition_number_dense, unitarity_defect, ComplexMatrix};
use crate::qstate::sample_index;
use crate::random;

/// Gates must be unitary to this tolerance.
pub const GATE_TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub wires: Vec<usize>,
    pub matrix: ComplexMatrix,
    pub name: Option<String>,
}

impl Gate {
    pub fn new(wires: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        let k = wires.len();
        if !(1..=2).contains(&k) {
            return Err(Error::InvalidCircuit(format!(
                "gate acts on {k} wires; 1 or 2 allowed"
            )));
        }
        if k == 2 && wires[0] == wires[1] {
            return Err(Error::InvalidCircuit(format!("repeated wire {}", wires[0])));
        }
        let d = 1 << k;
        if matrix.shape() != (d, d) {
            return Err(Error::InvalidCircuit(format!(
                "a {k}-wire gate needs a {d}x{d} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let defect = unitarity_defect(&matrix);
        if !(defect <= GATE_TOLERANCE) {
            return Err(Error::InvalidCircuit(format!(
                "gate is not unitary (defect {defect:e})"
            )));
        }
        Ok(Gate {
            wires,
            matrix,
            name: None,
        })
    }

    /// A named gate: `H X Y Z S T` on one wire, `CNOT CZ SWAP` on two
    /// (control first).
    pub fn named(name: &str, wires: Vec<usize>) -> Result<Self> {
        let upper = name.to_ascii_uppercase();
        let matrix = named_matrix(&upper)
            .ok_or_else(|| Error::InvalidCircuit(format!("unknown gate `{name}`")))?;
        let mut g = Gate::new(wires, matrix)?;
        g.name = Some(upper);
        Ok(g)
    }

    /// Applies the gate in place to an `n`-qubit statevector.
    pub fn apply(&self, n: usize, psi: &mut [Complex64]) {
        let k = self.wires.len();
        let d = 1 << k;
        let masks: Vec<usize> = self.wires.iter().map(|&w| 1 << (n - 1 - w)).collect();
        let all = masks.iter().fold(0, |a, m| a | m);
        let mut local = vec![ZERO; d];
        for base in 0..psi.len() {
            if base & all != 0 {
                continue;
            }
            let index = |l: usize| {
                (0..k).fold(base, |acc, q| {
                    if l >> (k - 1 - q) & 1 == 1 {
                        acc | masks[q]
                    } else {
                        acc
                    }
                })
            };
            for (l, x) in local.iter_mut().enumerate() {
                *x = psi[index(l)];
            }
            for r in 0..d {
                psi[index(r)] = (0..d).map(|c| self.matrix[(r, c)] * local[c]).sum();
            }
        }
    }

    /// The gate as a `2ⁿ × 2ⁿ` matrix.
    pub fn full_matrix(&self, n: usize) -> ComplexMatrix {
        let dim = 1 << n;
        let mut m = ComplexMatrix::zeros(dim, dim);
        let mut col = vec![ZERO; dim];
        for c in 0..dim {
            col.iter_mut().for_each(|z| *z = ZERO);
            col[c] = ONE;
            self.apply(n, &mut col);
            for (r, z) in col.iter().enumerate() {
                m[(r, c)] = *z;
            }
        }
        m
    }
}

fn named_matrix(name: &str) -> Option<ComplexMatrix> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let h = FRAC_1_SQRT_2;
    let m2 = |v: [Complex64; 4]| ComplexMatrix::from_row_slice(2, 2, &v);
    Some(match name {
        "H" => m2([c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]),
        "X" => m2([ZERO, ONE, ONE, ZERO]),
        "Y" => m2([ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]),
        "Z" => m2([ONE, ZERO, ZERO, c(-1.0, 0.0)]),
        "S" => m2([ONE, ZERO, ZERO, c(0.0, 1.0)]),
        "T" => m2([ONE, ZERO, ZERO, c(h, h)]),
        "CNOT" | "CX" => {
            let mut m = ComplexMatrix::zeros(4, 4);
            for (r, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
                m[(r, col)] = ONE;
            }
            m
        }
        "CZ" => ComplexMatrix::from_diagonal(&crate::linalg::ComplexVector::from_vec(vec![
            ONE,
            ONE,
            ONE,
            c(-1.0, 0.0),
        ])),
        "SWAP" => {
            let mut m = ComplexMatrix::zeros(4, 4);
            for (r, col) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
                m[(r, col)] = ONE;
            }
            m
        }
        _ => return None,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClockCircuit {
    n: usize,
    gates: Vec<Gate>,
}

impl ClockCircuit {
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidCircuit("need at least one qubit".into()));
        }
        if gates.is_empty() {
            return Err(Error::InvalidCircuit(
                "need at least one gate (T >= 1)".into(),
            ));
        }
        for (k, g) in gates.iter().enumerate() {
            if let Some(&w) = g.wires.iter().find(|&&w| w >= n) {
                return Err(Error::InvalidCircuit(format!(
                    "gate {} uses wire {w} but the circuit has {n} qubits",
                    k + 1
                )));
            }
        }
        Ok(ClockCircuit { n, gates })
    }

    /// `t` random two-qubit Haar gates on random wire pairs (one-qubit gates
    /// when `n = 1`).
    pub fn random<R: Rng + ?Sized>(n: usize, t: usize, rng: &mut R) -> Result<Self> {
        let mut gates = Vec::with_capacity(t);
        for _ in 0..t {
            let g = if n == 1 {
                Gate::new(vec![0], random::unitary(2, rng))?
            } else {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                Gate::new(vec![a, b], random::unitary(4, rng))?
            };
            gates.push(g);
        }
        Self::new(n, gates)
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Number of gates `T`.
    pub fn depth(&self) -> usize {
        self.gates.len()
    }

    /// `3T·2ⁿ`.
    pub fn clock_space_dim(&self) -> usize {
        (3 * self.depth()) << self.n
    }

    /// `U_T ⋯ U_1 |ψ⟩` by direct statevector simulation.
    pub fn simulate(&self, input: &[Complex64]) -> Result<Vec<Complex64>> {
        if input.len() != 1 << self.n {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.n,
                found: input.len(),
            });
        }
        let mut psi = input.to_vec();
        for g in &self.gates {
            g.apply(self.n, &mut psi);
        }
        Ok(psi)
    }

    /// `U_T ⋯ U_1 |0ⁿ⟩`.
    pub fn output_state(&self) -> Vec<Complex64> {
        let mut zero = vec![ZERO; 1 << self.n];
        zero[0] = ONE;
        self.simulate(&zero).expect("dimension matches")
    }
}

/// Parses the circuit format: `n T`, then one gate per line, either
/// `k g1 [g2] NAME` or `k g1 [g2]` followed by the `2^k × 2^k` matrix as
/// row-major `re im` pairs.
pub fn parse_circuit(text: &str) -> Result<ClockCircuit> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty circuit file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 2 {
        return Err(Error::parse(hl, "expected header `n T`"));
    }
    let n: usize = h[0]
        .parse()
        .map_err(|_| Error::parse(hl, format!("invalid qubit count `{}`", h[0])))?;
    let t: usize = h[1]
        .parse()
        .map_err(|_| Error::parse(hl, format!("invalid gate count `{}`", h[1])))?;
    let mut gates = Vec::with_capacity(t);
    let mut last = hl;
    for (ln, line) in lines {
        last = ln;
        let f: Vec<&str> = line.split_whitespace().collect();
        let k: usize = f[0]
            .parse()
            .map_err(|_| Error::parse(ln, format!("invalid wire count `{}`", f[0])))?;
        if !(1..=2).contains(&k) || f.len() < 1 + k + 1 {
            return Err(Error::parse(
                ln,
                "expected `k g1 [g2] NAME|matrix` with k in {1, 2}",
            ));
        }
        let mut wires = Vec::with_capacity(k);
        for s in &f[1..=k] {
            let w: usize = s
                .parse()
                .map_err(|_| Error::parse(ln, format!("invalid wire `{s}`")))?;
            if w >= n {
                return Err(Error::parse(
                    ln,
                    format!("wire {w} out of range for {n} qubits"),
                ));
            }
            wires.push(w);
        }
        let rest = &f[k + 1..];
        let gate = if rest.len() == 1 && rest[0].parse::<f64>().is_err() {
            Gate::named(rest[0], wires)
        } else {
            let d = 1 << k;
            if rest.len() != 2 * d * d {
                return Err(Error::parse(
                    ln,
                    format!(
                        "a {k}-wire matrix needs {} numbers, found {}",
                        2 * d * d,
                        rest.len()
                    ),
                ));
            }
            let mut vals = Vec::with_capacity(rest.len());
            for s in rest {
                let x: f64 = s
                    .parse()
                    .map_err(|_| Error::parse(ln, format!("invalid number `{s}`")))?;
                if !x.is_finite() {
                    return Err(Error::parse(ln, "non-finite matrix entry"));
                }
                vals.push(x);
            }
            let entries: Vec<Complex64> =
                vals.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
            Gate::new(wires, ComplexMatrix::from_row_slice(d, d, &entries))
        }
        .map_err(|e| Error::parse(ln, e.to_string()))?;
        gates.push(gate);
    }
    if gates.len() != t {
        return Err(Error::parse(
            last,
            format!("header declares {t} gates, found {}", gates.len()),
        ));
    }
    ClockCircuit::new(n, gates).map_err(|e| Error::parse(hl, e.to_string()))
}

pub fn format_circuit(circ: &ClockCircuit) -> String {
    let mut s = format!("{} {}\n", circ.n, circ.depth());
    for g in &circ.gates {
        let _ = write!(s, "{}", g.wires.len());
        for w in &g.wires {
            let _ = write!(s, " {w}");
        }
        match &g.name {
            Some(name) => {
                let _ = write!(s, " {name}");
            }
            None => {
                for r in 0..g.matrix.nrows() {
                    for c in 0..g.matrix.ncols() {
                        let z = g.matrix[(r, c)];
                        let _ = write!(s, " {:.16e} {:.16e}", z.re, z.im);
                    }
                }
            }
        }
        s.push('\n');
    }
    s
}

/// The `3T·2ⁿ`-dimensional clock unitary.
pub fn build_clock_unitary(circ: &ClockCircuit) -> ComplexMatrix {
    let t = circ.depth();
    let d = 1 << circ.n;
    let fulls: Vec<ComplexMatrix> = circ.gates.iter().map(|g| g.full_matrix(circ.n)).collect();
    let mut u = ComplexMatrix::zeros(3 * t * d, 3 * t * d);
    for s in 0..3 * t {
        let clock = s + 1;
        let next = (s + 1) % (3 * t);
        let block = if clock <= t {
            fulls[clock - 1].clone()
        } else if clock <= 2 * t {
            ComplexMatrix::identity(d, d)
        } else {
            fulls[3 * t - clock].adjoint()
        };
        u.view_mut((next * d, s * d), (d, d)).copy_from(&block);
    }
    u
}

#[derive(Clone, Debug)]
pub struct ClockMatrices {
    pub t: usize,
    pub n: usize,
    pub u: ComplexMatrix,
    /// `I − U e^{−1/T}`.
    pub a: ComplexMatrix,
    /// `[[0, A], [A^†, 0]]`.
    pub a_herm: ComplexMatrix,
}

impl ClockMatrices {
    pub fn decay(&self) -> f64 {
        (-1.0 / self.t as f64).exp()
    }

    pub fn condition_number(&self) -> Result<f64> {
        condition_number_dense(&self.a_herm)
    }

    /// `Σ_{k=0}^{k_max} U^k e^{−k/T}`.
    pub fn series_inverse(&self, k_max: usize) -> ComplexMatrix {
        let dim = self.u.nrows();
        let step = &self.u * Complex64::new(self.decay(), 0.0);
        let mut term = ComplexMatrix::identity(dim, dim);
        let mut sum = term.clone();
        for _ in 0..k_max {
            term = &step * &term;
            sum += &term;
        }
        sum
    }

    pub fn dense_inverse(&self) -> Result<ComplexMatrix> {
        self.a
            .clone()
            .lu()
            .try_inverse()
            .ok_or(Error::Singular { sigma_min: 0.0 })
    }

    /// Right-hand side `|1⟩|0ⁿ⟩`.
    pub fn rhs(&self) -> Vec<Complex64> {
        let mut b = vec![ZERO; self.u.nrows()];
        b[0] = ONE;
        b
    }

    /// Solves `A_herm y = (b, 0)` and returns the normalized `x` block.
    pub fn solve(&self) -> Result<Vec<Complex64>> {
        let dim = self.u.nrows();
        let mut rhs = crate::linalg::ComplexVector::zeros(2 * dim);
        rhs[0] = ONE;
        let y = self
            .a_herm
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or(Error::Singular { sigma_min: 0.0 })?;
        let x: Vec<Complex64> = y.iter().skip(dim).copied().collect();
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Ok(x.into_iter().map(|z| z / norm).collect())
    }

    /// `T+1 ≤ t ≤ 2T` as storage indices.
    pub fn window(&self) -> std::ops::Range<usize> {
        self.t..2 * self.t
    }

    /// Whether basis index `i` of the clock space is accepted by `M₀`
    /// (clock in the window, qubit 0 equal to 1).
    pub fn m0_accepts(&self, i: usize) -> bool {
        let d = 1 << self.n;
        self.window().contains(&(i / d)) && (i % d) >> (self.n - 1) & 1 == 1
    }
}

pub fn build_inversion_matrix(circ: &ClockCircuit) -> ClockMatrices {
    let u = build_clock_unitary(circ);
    let dim = u.nrows();
    let t = circ.depth();
    let a = ComplexMatrix::identity(dim, dim) - &u * Complex64::new((-1.0 / t as f64).exp(), 0.0);
    let mut a_herm = ComplexMatrix::zeros(2 * dim, 2 * dim);
    a_herm.view_mut((0, dim), (dim, dim)).copy_from(&a);
    a_herm
        .view_mut((dim, 0), (dim, dim))
        .copy_from(&a.adjoint());
    ClockMatrices {
        t,
        n: circ.n,
        u,
        a,
        a_herm,
    }
}

/// `e^{−2}/(1 + e^{−2} + e^{−4})`.
pub fn window_probability() -> f64 {
    let e2 = (-2.0f64).exp();
    e2 / (1.0 + e2 + e2 * e2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InversionStats {
    /// `P(T+1 ≤ t ≤ 2T)` from the amplitudes of `x`.
    pub window_probability: f64,
    /// Fidelity of the window-conditioned system state with `U_T⋯U_1|0ⁿ⟩`.
    pub fidelity: f64,
    /// `⟨x|M₀|x⟩`.
    pub m0_probability: f64,
    /// `P(qubit 0 = 1)` of the directly simulated circuit output.
    pub circuit_first_qubit: f64,
    pub shots: usize,
    /// Shots whose clock landed in the window.
    pub window_shots: usize,
    /// Window shots with qubit 0 equal to 1 (the `M₀` accepts).
    pub m0_shots: usize,
}

impl InversionStats {
    /// Sampled `P(qubit 0 = 1 | window)`.
    pub fn sampled_first_qubit(&self) -> f64 {
        if self.window_shots == 0 {
            0.0
        } else {
            self.m0_shots as f64 / self.window_shots as f64
        }
    }

    /// `|sampled − p| / σ` for the conditional first-qubit rate.
    pub fn first_qubit_z_score(&self) -> f64 {
        let p = self.circuit_first_qubit;
        let sigma = (p * (1.0 - p) / self.window_shots.max(1) as f64).sqrt();
        let diff = (self.sampled_first_qubit() - p).abs();
        if sigma == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / sigma
        }
    }
}

/// Solves the clock inversion problem for `|1⟩|0ⁿ⟩` and samples the time
/// register and qubit 0 of `|x⟩`.
pub fn simulate_via_inversion<R: Rng + ?Sized>(
    circ: &ClockCircuit,
    shots: usize,
    rng: &mut R,
) -> Result<InversionStats> {
    let m = build_inversion_matrix(circ);
    let x = m.solve()?;
    let d = 1 << circ.n;
    let target = circ.output_state();
    let mut window = 0.0;
    let mut overlap = 0.0;
    let mut m0 = 0.0;
    for s in m.window() {
        let block = &x[s * d..(s + 1) * d];
        window += block.iter().map(|z| z.norm_sqr()).sum::<f64>();
        overlap += block
            .iter()
            .zip(&target)
            .map(|(a, b)| b.conj() * a)
            .sum::<Complex64>()
            .norm_sqr();
    }
    for (i, z) in x.iter().enumerate() {
        if m.m0_accepts(i) {
            m0 += z.norm_sqr();
        }
    }
    let circuit_first_qubit = target
        .iter()
        .enumerate()
        .filter(|(i, _)| (i >> (circ.n - 1)) & 1 == 1)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    let weights: Vec<f64> = x.iter().map(|z| z.norm_sqr()).collect();
    let (mut window_shots, mut m0_shots) = (0, 0);
    for _ in 0..shots {
        let i = sample_index(&weights, rng);
        if m.window().contains(&(i / d)) {
            window_shots += 1;
            if m.m0_accepts(i) {
                m0_shots += 1;
            }
        }
    }
    Ok(InversionStats {
        window_probability: window,
        fidelity: overlap / window,
        m0_probability: m0,
        circuit_first_qubit,
        shots,
        window_shots,
        m0_shots,
    })
}

/// The first-qubit variant: `B = diag(I, I − Ue^{−1/T})`, rows and columns
/// permuted to `B̃`, wrapped as `C = [[0, B̃], [B̃^†, 0]]`.
#[derive(Clone, Debug)]
pub struct FirstQubitEmbedding {
    pub c: ComplexMatrix,
    pub b_tilde: ComplexMatrix,
    /// `perm[new] = old` index into `B`'s rows and columns.
    pub perm: Vec<usize>,
    /// Dimension of `B` (`9T·2ⁿ`); the designated qubit splits `y`'s second
    /// block at `half = dim_b / 2`.
    pub dim_b: usize,
}

impl FirstQubitEmbedding {
    pub fn half(&self) -> usize {
        self.dim_b / 2
    }

    /// `(b̃, 0)` with `b̃ = P (0, |1⟩|0ⁿ⟩)`.
    pub fn rhs(&self) -> Vec<Complex64> {
        let offset = self.dim_b / 3 * 2;
        let mut v = vec![ZERO; 2 * self.dim_b];
        let new = self
            .perm
            .iter()
            .position(|&o| o == offset)
            .expect("permutation");
        v[new] = ONE;
        v
    }

    pub fn solve(&self) -> Result<Vec<Complex64>> {
        let rhs = crate::linalg::ComplexVector::from_vec(self.rhs());
        let y = self
            .c
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or(Error::Singular { sigma_min: 0.0 })?;
        let norm = y.norm();
        Ok(y.iter().map(|z| z / norm).collect())
    }

    /// Probability that the designated qubit of `|y⟩` reads 0 (index in the
    /// top half of `y`'s second block).
    pub fn designated_probability(&self, y: &[Complex64]) -> f64 {
        y[self.dim_b..self.dim_b + self.half()]
            .iter()
            .map(|z| z.norm_sqr())
            .sum()
    }

    pub fn condition_number(&self) -> Result<f64> {
        condition_number_dense(&self.c)
    }
}

pub fn build_first_qubit_embedding(circ: &ClockCircuit) -> FirstQubitEmbedding {
    let m = build_inversion_matrix(circ);
    let dim_a = m.a.nrows();
    let pad = 2 * dim_a;
    let dim_b = pad + dim_a;
    let mut b = ComplexMatrix::identity(dim_b, dim_b);
    b.view_mut((pad, pad), (dim_a, dim_a)).copy_from(&m.a);

    let accepted: Vec<usize> = (0..dim_a)
        .filter(|&i| m.m0_accepts(i))
        .map(|i| pad + i)
        .collect();
    let rejected: Vec<usize> = (0..dim_a)
        .filter(|&i| !m.m0_accepts(i))
        .map(|i| pad + i)
        .collect();
    let fill = dim_b / 2 - accepted.len();
    let mut perm = accepted;
    perm.extend(0..fill);
    perm.extend(fill..pad);
    perm.extend(rejected);

    let b_tilde = ComplexMatrix::from_fn(dim_b, dim_b, |r, c| b[(perm[r], perm[c])]);
    let mut c = ComplexMatrix::zeros(2 * dim_b, 2 * dim_b);
    c.view_mut((0, dim_b), (dim_b, dim_b)).copy_from(&b_tilde);
    c.view_mut((dim_b, 0), (dim_b, dim_b))
        .copy_from(&b_tilde.adjoint());
    FirstQubitEmbedding {
        c,
        b_tilde,
        perm,
        dim_b,
    }
}

/// Iterated base-2 logarithm.
pub fn log_star(x: f64) -> u32 {
    let mut x = x;
    let mut k = 0;
    while x > 1.0 {
        x = x.log2();
        k += 1;
    }
    k
}

/// `log₂N · (log*N)² · s² · t₀ · 9^{√ln(s²t₀/ε_H)}`.
pub fn hamiltonian_sim_cost(n: f64, s: f64, t0: f64, eps_h: f64) -> Result<f64> {
    for (name, v) in [("N", n), ("s", s), ("t0", t0), ("epsH", eps_h)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("{name} = {v} must be positive")));
        }
    }
    let ratio = s * s * t0 / eps_h;
    if ratio <= 1.0 {
        return Err(Error::Domain(format!(
            "epsH = {eps_h} must be below s^2 t0 = {}",
            s * s * t0
        )));
    }
    let ls = log_star(n) as f64;
    Ok(n.log2() * ls * ls * s * s * t0 * 9f64.powf(ratio.ln().sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, max_abs_diff};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn matrix_power(m: &ComplexMatrix, k: usize) -> ComplexMatrix {
        let mut p = ComplexMatrix::identity(m.nrows(), m.ncols());
        for _ in 0..k {
            p = m * &p;
        }
        p
    }

    #[test]
    fn gate_embedding_matches_kron() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random::unitary(4, &mut rng);
        let g = Gate::new(vec![1, 2], u.clone()).unwrap();
        let expected = kron(&ComplexMatrix::identity(2, 2), &u);
        assert!(max_abs_diff(&g.full_matrix(3), &expected) < 1e-15);
        let h = Gate::named("h", vec![0]).unwrap();
        let expected = kron(&named_matrix("H").unwrap(), &ComplexMatrix::identity(4, 4));
        assert!(max_abs_diff(&h.full_matrix(3), &expected) < 1e-15);
        // Reversed wires equal SWAP · G · SWAP.
        let r = Gate::new(vec![1, 0], u.clone()).unwrap();
        let swap = named_matrix("SWAP").unwrap();
        assert!(max_abs_diff(&r.full_matrix(2), &(&swap * &u * &swap)) < 1e-15);
    }

    #[test]
    fn gate_validation() {
        let bad = ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), ZERO, ONE]);
        assert!(matches!(
            Gate::new(vec![0], bad),
            Err(Error::InvalidCircuit(_))
        ));
        assert!(Gate::named("CNOT", vec![0, 0]).is_err());
        assert!(Gate::named("FOO", vec![0]).is_err());
        assert!(ClockCircuit::new(1, vec![Gate::named("CNOT", vec![0, 1]).unwrap()]).is_err());
        assert!(ClockCircuit::new(2, vec![]).is_err());
    }

    #[test]
    fn identity_circuit_is_cyclic_shift() {
        let id = ComplexMatrix::identity(2, 2);
        let circ = ClockCircuit::new(1, vec![Gate::new(vec![0], id).unwrap()]).unwrap();
        let u = build_clock_unitary(&circ);
        let shift = ComplexMatrix::from_fn(3, 3, |r, c| if r == (c + 1) % 3 { ONE } else { ZERO });
        assert!(max_abs_diff(&u, &kron(&shift, &ComplexMatrix::identity(2, 2))) < 1e-15);
    }

    #[test]
    fn clock_unitary_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (n, t) in [(2, 2), (3, 4), (2, 3), (1, 2)] {
            let circ = ClockCircuit::random(n, t, &mut rng).unwrap();
            let u = build_clock_unitary(&circ);
            assert_eq!(u.nrows(), (3 * t) << n);
            assert!(unitarity_defect(&u) <= 1e-10);
            let p = matrix_power(&u, 3 * t);
            assert!(max_abs_diff(&p, &ComplexMatrix::identity(u.nrows(), u.nrows())) <= 1e-9);
        }
    }

    #[test]
    fn clock_promotion() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let circ = ClockCircuit::random(3, 4, &mut rng).unwrap();
        let u = build_clock_unitary(&circ);
        let d = 8;
        let psi = random::state_vector(d, &mut rng);
        let mut state = crate::linalg::ComplexVector::zeros(u.nrows());
        for (i, z) in psi.iter().enumerate() {
            state[i] = *z;
        }
        let mut expected = psi.clone();
        for t in 1..=2 * circ.depth() {
            state = &u * &state;
            if t <= circ.depth() {
                circ.gates()[t - 1].apply(3, &mut expected);
            }
            for s in 0..3 * circ.depth() {
                for i in 0..d {
                    let want = if s == t { expected[i] } else { ZERO };
                    assert!((state[s * d + i] - want).norm() <= 1e-10, "t = {t}");
                }
            }
        }
    }

    #[test]
    fn inversion_series_and_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let id = Gate::new(vec![0], ComplexMatrix::identity(2, 2)).unwrap();
        let m = build_inversion_matrix(&ClockCircuit::new(1, vec![id]).unwrap());
        let k = m.condition_number().unwrap();
        assert!(k <= 2.0, "{k}");
        assert!(crate::linalg::hermitian_deviation(&m.a_herm) == 0.0);

        let circ = ClockCircuit::random(2, 3, &mut rng).unwrap();
        let m = build_inversion_matrix(&circ);
        assert!(m.condition_number().unwrap() <= 6.0);
        let series = m.series_inverse(60 * m.t);
        assert!(max_abs_diff(&series, &m.dense_inverse().unwrap()) <= 1e-8);
    }

    #[test]
    fn condition_number_closed_form() {
        // U's spectrum is the 3T-th roots of unity ω, so σ(A) = |1 − qω|.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for t in 1..=4 {
            let m = build_inversion_matrix(&ClockCircuit::random(2, t, &mut rng).unwrap());
            let q = m.decay();
            let r = 3 * t;
            let top = (0..r)
                .map(|k| {
                    (ONE - Complex64::from_polar(q, std::f64::consts::TAU * k as f64 / r as f64))
                        .norm()
                })
                .fold(0.0, f64::max);
            let expected = top / (1.0 - q);
            assert!(
                (m.condition_number().unwrap() - expected).abs() < 1e-9,
                "T = {t}"
            );
            if t % 2 == 0 {
                assert!((expected - 1.0 / (0.5 / t as f64).tanh()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn window_probability_value() {
        let p = window_probability();
        assert!(p >= 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let circ = ClockCircuit::random(2, 2, &mut rng).unwrap();
        let stats = simulate_via_inversion(&circ, 0, &mut rng).unwrap();
        assert!((stats.window_probability - p).abs() <= 1e-10);
        assert!(stats.fidelity >= 1.0 - 1e-9);
    }

    #[test]
    fn identity_circuit_conditional_state() {
        let id = Gate::new(vec![0, 1], ComplexMatrix::identity(4, 4)).unwrap();
        let circ = ClockCircuit::new(2, vec![id]).unwrap();
        let m = build_inversion_matrix(&circ);
        let x = m.solve().unwrap();
        for s in m.window() {
            for i in 1..4 {
                assert_eq!(x[s * 4 + i].norm(), 0.0);
            }
        }
    }

    #[test]
    fn m0_statistics_match_direct_simulation() {
        let circ = ClockCircuit::new(
            2,
            vec![
                Gate::named("H", vec![0]).unwrap(),
                Gate::named("CNOT", vec![0, 1]).unwrap(),
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let stats = simulate_via_inversion(&circ, 10_000, &mut rng).unwrap();
        assert!((stats.circuit_first_qubit - 0.5).abs() < 1e-12);
        assert!((stats.m0_probability - window_probability() * 0.5).abs() < 1e-10);
        assert!(stats.first_qubit_z_score() <= 3.0, "{stats:?}");
    }

    #[test]
    fn first_qubit_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let circ = ClockCircuit::random(2, 2, &mut rng).unwrap();
        let e = build_first_qubit_embedding(&circ);
        assert_eq!(e.c.nrows(), 18 * 2 * 4);
        assert!(crate::linalg::hermitian_deviation(&e.c) == 0.0);
        let mut sorted = e.perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..e.dim_b).collect::<Vec<_>>());

        let m = build_inversion_matrix(&circ);
        let ka = m.condition_number().unwrap();
        assert!((e.condition_number().unwrap() - ka).abs() <= 1e-8);

        let y = e.solve().unwrap();
        let x = m.solve().unwrap();
        let m0: f64 = x
            .iter()
            .enumerate()
            .filter(|(i, _)| m.m0_accepts(*i))
            .map(|(_, z)| z.norm_sqr())
            .sum();
        assert!((e.designated_probability(&y) - m0).abs() <= 1e-8);
        assert!(y[..e.dim_b].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn circuit_file_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut gates = ClockCircuit::random(3, 2, &mut rng).unwrap().gates;
        gates.push(Gate::named("cnot", vec![2, 0]).unwrap());
        let circ = ClockCircuit::new(3, gates).unwrap();
        let back = parse_circuit(&format_circuit(&circ)).unwrap();
        assert_eq!(back.depth(), 3);
        for (a, b) in circ.gates().iter().zip(back.gates()) {
            assert_eq!(a.wires, b.wires);
            assert!(max_abs_diff(&a.matrix, &b.matrix) < 1e-15);
        }
    }

    #[test]
    fn circuit_parse_errors() {
        let err = parse_circuit("2 2\n1 0 H\n2 0 5 CNOT\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_circuit("2 1\n1 0 1 0 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_circuit("2 2\n1 0 H\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_circuit("1 1\n1 0 2 0 0 0 0 0 1 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn cost_model() {
        let base = hamiltonian_sim_cost(1e6, 8.0, 1e3, 1e-6).unwrap();
        assert!(base.is_finite() && base > 0.0);
        for t0 in [1e2, 1e3, 1e4, 1e5] {
            let r = hamiltonian_sim_cost(1e6, 8.0, 2.0 * t0, 1e-6).unwrap()
                / hamiltonian_sim_cost(1e6, 8.0, t0, 1e-6).unwrap();
            assert!(r > 2.0 && r < 2.5, "t0 = {t0}: {r}");
        }
        assert!(hamiltonian_sim_cost(1e6, 16.0, 1e3, 1e-6).unwrap() > 4.0 * base);
        assert!(hamiltonian_sim_cost(1e7, 8.0, 1e3, 1e-6).unwrap() >= base);
        assert!(matches!(
            hamiltonian_sim_cost(4.0, 1.0, 1.0, 2.0),
            Err(Error::Domain(_))
        ));
        assert_eq!(log_star(1e6), 5);
        assert_eq!(log_star(2.0), 1);
        assert_eq!(log_star(16.0), 3);
    }
}
