use std::path::Path;

use hhl_lab::clock::{
    build_first_qubit_embedding, build_inversion_matrix, hamiltonian_sim_cost, log_star,
    parse_circuit, simulate_via_inversion, window_probability, ClockCircuit,
};
use hhl_lab::filters::FilterSpec;
use hhl_lab::hhl::{solve_eig, solve_general as solve_general_lab, HHLConfig, SolveReport};
use hhl_lab::io::{
    format_matrix, format_vector, parse_matrix, parse_sparse_hermitian, parse_state, parse_vector,
};
use hhl_lab::linalg::{
    condition_number, eig_hermitian, max_abs_diff, singular_values, ComplexMatrix,
};
use hhl_lab::observables::{estimate_observable, swap_test as swap_test_lab, ObservableSpec};
use hhl_lab::phase_est::{alpha_bound, alpha_closed_form, PhaseEstConfig, SYSTEM};
use hhl_lab::qstate::prepare_amplitudes;
use hhl_lab::random;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::output::{complex_vec, emit, to_json, Cell, Table};
use crate::{
    CostModelArgs, Emit, ErrorScanArgs, Failure, FilterScanArgs, HhlArgs, Mode, ObserveArgs,
    PhaseScanArgs, ReduceArgs, SimulateCircuitArgs, SolveArgs, SwapTestArgs,
};

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn load<T>(path: &Path, parse: impl Fn(&str) -> hhl_lab::Result<T>) -> Result<T, Failure> {
    parse(&read(path)?).map_err(|e| Failure::in_file(path, e))
}

fn filter(mode: Mode, kappa: f64, c: Option<f64>) -> Result<FilterSpec, Failure> {
    Ok(match mode {
        Mode::Filtered => FilterSpec::filtered(kappa)?,
        Mode::Simple => FilterSpec::simple(kappa, c)?,
    })
}

fn config(
    args: &HhlArgs,
    default_kappa: impl FnOnce() -> hhl_lab::Result<f64>,
) -> Result<HHLConfig, Failure> {
    let kappa = match args.kappa {
        Some(k) => k,
        None => default_kappa()?,
    };
    let spec = filter(args.mode, kappa, args.c)?;
    let mut cfg = match args.t0 {
        Some(t0) => {
            let pe = match args.clock_dim {
                Some(t) => PhaseEstConfig::new(t, t0)?,
                None => PhaseEstConfig::with_t0(t0)?,
            };
            HHLConfig::with_clock(spec, pe)?
        }
        None => {
            let mut cfg = HHLConfig::from_epsilon(spec, args.epsilon, args.t0_const)?;
            if let Some(t) = args.clock_dim {
                cfg.pe = PhaseEstConfig::new(t, cfg.t0())?;
            }
            cfg
        }
    };
    if args.amplify {
        cfg = cfg.amplified(args.seed);
    }
    cfg.seed = args.seed;
    Ok(cfg)
}

fn report_json(r: &SolveReport) -> Map<String, Value> {
    let mut m = Map::new();
    let mut put = |k: &str, v: Value| {
        m.insert(k.to_string(), v);
    };
    put("solution_vector", complex_vec(&r.solution_vector));
    put("exact_vector", complex_vec(&r.exact_vector));
    put("distance", json!(r.distance));
    put("distance_system", json!(r.distance_system));
    put("distance_unpostselected", json!(r.distance_unpostselected));
    put("distance_flagged", json!(r.distance_flagged));
    put("p_tilde", json!(r.p_tilde));
    put("p_exact", json!(r.p_exact));
    put("p_tilde_flagged", json!(r.p_tilde_flagged));
    put("p_exact_flagged", json!(r.p_exact_flagged));
    put("weights", json!(r.weights));
    put("exact_weights", json!(r.exact_weights));
    put("ill_weight", json!(r.ill_weight));
    put("ill_weight_exact", json!(r.ill_weight_exact));
    put("repetitions", json!(r.repetitions));
    put("amplified", json!(r.amplified));
    put("amplification_succeeded", json!(r.amplification_succeeded));
    put("negative_spectrum", json!(r.negative_spectrum));
    put("t0", json!(r.t0));
    put("clock_dim", json!(r.clock_dim));
    put("kappa", json!(r.kappa));
    m
}

fn dump(path: Option<&Path>, r: &SolveReport) -> Result<(), Failure> {
    match path {
        Some(p) => emit(Some(p), &r.solution.dump()),
        None => Ok(()),
    }
}

pub fn solve(a: &SolveArgs) -> Result<(), Failure> {
    let m = load(&a.matrix, parse_sparse_hermitian)?;
    let b = load(&a.rhs, parse_vector)?;
    let cfg = config(&a.hhl, || condition_number(&m))?;
    if m.dim() != b.len() {
        return Err(hhl_lab::Error::DimensionMismatch {
            expected: m.dim(),
            found: b.len(),
        }
        .into());
    }
    let r = solve_eig(&eig_hermitian(&m), &b, &cfg, &cfg.filter)?;
    dump(a.dump_state.as_deref(), &r)?;
    emit(
        a.report.as_deref(),
        &to_json(&Value::Object(report_json(&r))),
    )
}

/// `‖A‖ / σ_min` over the nonzero singular values, matching the scaled
/// embedding's well-conditioned band.
fn embedding_kappa(a: &ComplexMatrix) -> hhl_lab::Result<f64> {
    let s = singular_values(a);
    let top = s[0];
    let low = s
        .iter()
        .copied()
        .filter(|&x| x > 1e-12 * top)
        .fold(f64::INFINITY, f64::min);
    if !low.is_finite() {
        return Err(hhl_lab::Error::Singular { sigma_min: 0.0 });
    }
    Ok(top.max(1.0) / low)
}

pub fn solve_general(a: &SolveArgs) -> Result<(), Failure> {
    let m = load(&a.matrix, parse_matrix)?;
    let b = load(&a.rhs, parse_vector)?;
    let cfg = config(&a.hhl, || embedding_kappa(&m))?;
    let g = solve_general_lab(&m, &b, &cfg)?;
    dump(a.dump_state.as_deref(), &g.report)?;
    let mut j = report_json(&g.report);
    j.insert(
        "embedded_solution_vector".into(),
        j["solution_vector"].clone(),
    );
    j.insert("embedded_exact_vector".into(), j["exact_vector"].clone());
    j.insert("solution_vector".into(), complex_vec(&g.solution_vector));
    j.insert("exact_vector".into(), complex_vec(&g.exact_vector));
    j.insert("rows".into(), json!(g.rows));
    j.insert("cols".into(), json!(g.cols));
    j.insert("scale".into(), json!(g.scale));
    emit(a.report.as_deref(), &to_json(&Value::Object(j)))
}

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, Failure> {
    if points == 0 || !(lo <= hi) {
        return Err(Failure::input(format!(
            "invalid grid [{lo}, {hi}] with {points} points"
        )));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|k| lo + step * k as f64).collect())
}

pub fn phase_scan(a: &PhaseScanArgs) -> Result<(), Failure> {
    let deltas = grid(a.delta_min, a.delta_max, a.points)?;
    let mut t = Table::new(&["delta", "T", "re_alpha", "im_alpha", "abs2_alpha", "bound"]);
    for &clock in &a.clock_dims {
        if clock < 2 {
            return Err(
                hhl_lab::Error::InvalidClock(format!("T = {clock} must be at least 2")).into(),
            );
        }
        for &d in &deltas {
            let z = alpha_closed_form(d, clock);
            t.row(&[
                Cell::F(d),
                Cell::U(clock),
                Cell::F(z.re),
                Cell::F(z.im),
                Cell::F(z.norm_sqr()),
                Cell::F(alpha_bound(d)),
            ]);
        }
    }
    emit(a.out.as_deref(), &t.finish())
}

pub fn filter_scan(a: &FilterScanArgs) -> Result<(), Failure> {
    let spec = filter(a.mode, a.kappa, a.c)?;
    let mut t = Table::new(&["lambda", "f", "g", "f2_plus_g2", "dh_norm"]);
    for l in grid(a.lambda_min, a.lambda_max, a.points)? {
        let (f, g) = (spec.f(l), spec.g(l));
        t.row(&[
            Cell::F(l),
            Cell::F(f),
            Cell::F(g),
            Cell::F(f * f + g * g),
            Cell::F(spec.derivative_norm(l, a.step)?),
        ]);
    }
    emit(a.out.as_deref(), &t.finish())
}

pub fn error_scan(a: &ErrorScanArgs) -> Result<(), Failure> {
    let (m, b, default_kappa) = match (&a.matrix, &a.rhs) {
        (Some(mp), Some(bp)) => {
            let m = load(mp, parse_sparse_hermitian)?;
            let b = load(bp, parse_vector)?;
            let k = condition_number(&m);
            (m, b, k)
        }
        _ => {
            if !(a.lo > 0.0 && a.lo <= a.hi && a.hi <= 1.0) {
                return Err(hhl_lab::Error::Domain(format!(
                    "spectrum band [{}, {}] must lie in (0, 1]",
                    a.lo, a.hi
                ))
                .into());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let m = random::hermitian_in_band(a.dim, a.lo, a.hi, &mut rng);
            let b = random::state_vector(a.dim, &mut rng);
            (m, b, Ok(1.0 / a.lo))
        }
    };
    let kappa = match a.kappa {
        Some(k) => k,
        None => default_kappa?,
    };
    let spec = filter(a.mode, kappa, a.c)?;
    let eig = eig_hermitian(&m);
    let mut t = Table::new(&[
        "t0",
        "T",
        "distance",
        "distance_system",
        "distance_unpostselected",
        "distance_flagged",
        "p_tilde",
        "p_exact",
        "p_rel_error",
    ]);
    for &t0 in &a.t0 {
        let cfg = HHLConfig::with_t0(spec, t0)?;
        let r = solve_eig(&eig, &b, &cfg, &cfg.filter)?;
        t.row(&[
            Cell::F(t0),
            Cell::U(r.clock_dim),
            Cell::F(r.distance),
            Cell::F(r.distance_system),
            Cell::F(r.distance_unpostselected),
            Cell::F(r.distance_flagged),
            Cell::F(r.p_tilde),
            Cell::F(r.p_exact),
            Cell::F((r.p_tilde - r.p_exact).abs() / r.p_exact),
        ]);
    }
    emit(a.out.as_deref(), &t.finish())
}

fn matrix_power_defect(u: &ComplexMatrix, k: usize) -> f64 {
    let n = u.nrows();
    let mut p = ComplexMatrix::identity(n, n);
    for _ in 0..k {
        p = u * &p;
    }
    max_abs_diff(&p, &ComplexMatrix::identity(n, n))
}

fn load_circuit(path: &Path) -> Result<ClockCircuit, Failure> {
    load(path, parse_circuit)
}

pub fn reduce(a: &ReduceArgs) -> Result<(), Failure> {
    let circ = load_circuit(&a.circuit)?;
    let m = build_inversion_matrix(&circ);
    let text = match a.emit {
        Emit::Matrix => format_matrix(&m.a),
        Emit::Rhs => format_vector(&m.rhs()),
        Emit::Stats => {
            let t = circ.depth();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let stats = simulate_via_inversion(&circ, 0, &mut rng)?;
            let series = m.series_inverse(60 * t);
            let emb = build_first_qubit_embedding(&circ);
            let y = emb.solve()?;
            let j = json!({
                "qubits": circ.qubits(),
                "gates": t,
                "dim": m.a.nrows(),
                "kappa": m.condition_number()?,
                "kappa_bound": 2.0 * t as f64,
                "unitary_period_defect": matrix_power_defect(&m.u, 3 * t),
                "series_inverse_defect": max_abs_diff(&series, &m.dense_inverse()?),
                "window_probability": stats.window_probability,
                "window_probability_formula": window_probability(),
                "fidelity": stats.fidelity,
                "m0_probability": stats.m0_probability,
                "circuit_first_qubit": stats.circuit_first_qubit,
                "first_qubit_embedding": {
                    "dim": emb.c.nrows(),
                    "kappa": emb.condition_number()?,
                    "designated_probability": emb.designated_probability(&y),
                },
            });
            to_json(&j)
        }
    };
    emit(a.out.as_deref(), &text)
}

pub fn simulate_circuit(a: &SimulateCircuitArgs) -> Result<(), Failure> {
    let circ = load_circuit(&a.circuit)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let s = simulate_via_inversion(&circ, a.shots, &mut rng)?;
    let probs: Vec<f64> = circ.output_state().iter().map(|z| z.norm_sqr()).collect();
    let j = json!({
        "qubits": circ.qubits(),
        "gates": circ.depth(),
        "output_probabilities": probs,
        "window_probability": s.window_probability,
        "window_probability_formula": window_probability(),
        "fidelity": s.fidelity,
        "m0_probability": s.m0_probability,
        "circuit_first_qubit": s.circuit_first_qubit,
        "shots": s.shots,
        "window_shots": s.window_shots,
        "m0_shots": s.m0_shots,
        "sampled_first_qubit": s.sampled_first_qubit(),
        "z_score": s.first_qubit_z_score(),
        "seed": a.seed,
    });
    emit(a.out.as_deref(), &to_json(&j))
}

pub fn swap_test(a: &SwapTestArgs) -> Result<(), Failure> {
    let sa = load(&a.state_a, |t| parse_state(t, "x"))?;
    let sb = load(&a.state_b, |t| parse_state(t, "x"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let r = swap_test_lab(&sa, &sb, a.shots, &mut rng)?;
    let j = json!({
        "accept_probability": r.accept_probability,
        "overlap_exact": r.overlap_exact,
        "accepted": r.accepted,
        "shots": r.shots,
        "estimate": r.estimate,
        "stderr": r.stderr,
        "seed": a.seed,
    });
    emit(a.out.as_deref(), &to_json(&j))
}

pub fn observe(a: &ObserveArgs) -> Result<(), Failure> {
    let m = load(&a.matrix, parse_sparse_hermitian)?;
    let b = load(&a.rhs, parse_vector)?;
    let spec = match &a.observable {
        Some(p) => {
            let mat = load(p, parse_matrix)?;
            ObservableSpec::new(mat, a.shots).map_err(|e| Failure::in_file(p, e))?
        }
        None => ObservableSpec::first_qubit_projector(m.dim(), a.shots)?,
    };
    let cfg = config(&a.hhl, || condition_number(&m))?;
    if m.dim() != b.len() {
        return Err(hhl_lab::Error::DimensionMismatch {
            expected: m.dim(),
            found: b.len(),
        }
        .into());
    }
    let r = solve_eig(&eig_hermitian(&m), &b, &cfg, &cfg.filter)?;
    let x = prepare_amplitudes(SYSTEM, &r.solution_vector)?;
    let exact = prepare_amplitudes(SYSTEM, &r.exact_vector)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.hhl.seed);
    let e = estimate_observable(&x, &spec, &mut rng)?;
    let ideal = estimate_observable(
        &exact,
        &ObservableSpec {
            shots: 0,
            ..spec.clone()
        },
        &mut rng,
    )?;
    let j = json!({
        "estimate": e.estimate,
        "stderr": e.stderr,
        "exact": e.exact,
        "exact_on_ideal_solution": ideal.exact,
        "shots": e.shots,
        "distance": r.distance,
        "p_tilde": r.p_tilde,
        "t0": r.t0,
        "kappa": r.kappa,
        "seed": a.hhl.seed,
    });
    emit(a.report.as_deref(), &to_json(&j))
}

pub fn cost_model(a: &CostModelArgs) -> Result<(), Failure> {
    let cost = hamiltonian_sim_cost(a.n, a.s, a.t0, a.eps_h)?;
    let j = json!({
        "N": a.n,
        "s": a.s,
        "t0": a.t0,
        "epsH": a.eps_h,
        "log_star_N": log_star(a.n),
        "cost": cost,
    });
    emit(a.out.as_deref(), &to_json(&j))
}
