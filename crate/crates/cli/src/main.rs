use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

/// Exact statevector laboratory for the HHL matrix-inversion algorithm.
#[derive(Parser, Debug)]
#[command(name = "hhl", version)]
struct Cli {
    /// Print the elapsed wall time to stderr.
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve A x = b for Hermitian A and write a JSON report.
    Solve(SolveArgs),
    /// Solve A x = b for a general M x N matrix through the Hermitian embedding.
    SolveGeneral(SolveArgs),
    /// Tabulate the phase-estimation kernel alpha(delta) as CSV.
    PhaseScan(PhaseScanArgs),
    /// Tabulate the filter functions f and g as CSV.
    FilterScan(FilterScanArgs),
    /// Distances of the simulated solution at several t0 values, as CSV.
    ErrorScan(ErrorScanArgs),
    /// Build the clock inversion matrix of a circuit.
    Reduce(ReduceArgs),
    /// Run a circuit by matrix inversion and compare with direct simulation.
    SimulateCircuit(SimulateCircuitArgs),
    /// SWAP test between two states.
    SwapTest(SwapTestArgs),
    /// Estimate <x|M|x> on the solution of A x = b.
    Observe(ObserveArgs),
    /// Evaluate the Hamiltonian-simulation cost model.
    CostModel(CostModelArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Filtered,
    Simple,
}

#[derive(Args, Debug, Clone)]
pub struct HhlArgs {
    /// Condition-number bound; defaults to the condition number of the input.
    #[arg(long)]
    kappa: Option<f64>,
    /// Target accuracy; sets t0 = t0-const * kappa / epsilon.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Constant c in t0 = c * kappa / epsilon.
    #[arg(long = "t0-const", default_value_t = hhl_lab::hhl::DEFAULT_T0_CONST)]
    t0_const: f64,
    /// Evolution time; overrides --epsilon.
    #[arg(long)]
    t0: Option<f64>,
    /// Clock dimension T (power of two, at least 16 t0).
    #[arg(long = "clock-dim")]
    clock_dim: Option<usize>,
    /// Filter pair: the smooth well/ill filter or the hard cutoff.
    #[arg(long, value_enum, default_value_t = Mode::Filtered)]
    mode: Mode,
    /// Threshold of the simple filter (default 1/(2 kappa)).
    #[arg(long)]
    c: Option<f64>,
    /// Use amplitude amplification instead of plain post-selection.
    #[arg(long)]
    amplify: bool,
    /// Seed for amplification and sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Matrix file (sparse Hermitian for solve, dense M N for solve-general).
    #[arg(long)]
    matrix: PathBuf,
    /// Right-hand side vector file.
    #[arg(long)]
    rhs: PathBuf,
    #[command(flatten)]
    hhl: HhlArgs,
    /// Write the post-selected state in dump format.
    #[arg(long = "dump-state")]
    dump_state: Option<PathBuf>,
    /// Output file (stdout if absent).
    #[arg(long, visible_alias = "out")]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PhaseScanArgs {
    /// Clock dimensions to scan.
    #[arg(
        long = "clock-dims",
        value_delimiter = ',',
        default_value = "32,128,512"
    )]
    clock_dims: Vec<usize>,
    #[arg(long = "delta-min", default_value_t = -64.0, allow_negative_numbers = true)]
    delta_min: f64,
    #[arg(
        long = "delta-max",
        default_value_t = 64.0,
        allow_negative_numbers = true
    )]
    delta_max: f64,
    #[arg(long, default_value_t = 257)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FilterScanArgs {
    #[arg(long, default_value_t = 10.0)]
    kappa: f64,
    #[arg(long, value_enum, default_value_t = Mode::Filtered)]
    mode: Mode,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long = "lambda-min", default_value_t = -1.0, allow_negative_numbers = true)]
    lambda_min: f64,
    #[arg(
        long = "lambda-max",
        default_value_t = 1.0,
        allow_negative_numbers = true
    )]
    lambda_max: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
    /// Finite-difference step for the derivative of the flag state.
    #[arg(long, default_value_t = 1e-6)]
    step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ErrorScanArgs {
    /// Sparse Hermitian matrix file; a random instance is drawn if absent.
    #[arg(long, requires = "rhs")]
    matrix: Option<PathBuf>,
    #[arg(long, requires = "matrix")]
    rhs: Option<PathBuf>,
    /// Dimension of the random instance.
    #[arg(long, default_value_t = 8)]
    dim: usize,
    /// Spectrum band [lo, hi] of the random instance.
    #[arg(long, default_value_t = 0.1)]
    lo: f64,
    #[arg(long, default_value_t = 1.0)]
    hi: f64,
    #[arg(long, value_delimiter = ',', default_value = "200,400,800,1600")]
    t0: Vec<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, value_enum, default_value_t = Mode::Filtered)]
    mode: Mode,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum Emit {
    /// The matrix I - U exp(-1/T) in the dense M N format.
    Matrix,
    /// The right-hand side |1>|0...0> as a vector file.
    Rhs,
    /// JSON summary of the reduction.
    Stats,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long, value_enum, default_value_t = Emit::Stats)]
    emit: Emit,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateCircuitArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SwapTestArgs {
    /// State file (vector or state dump).
    #[arg(long = "state-a")]
    state_a: PathBuf,
    #[arg(long = "state-b")]
    state_b: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ObserveArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    rhs: PathBuf,
    /// Observable in the dense M N format.
    #[arg(
        long = "M",
        required_unless_present = "first_qubit",
        conflicts_with = "first_qubit"
    )]
    observable: Option<PathBuf>,
    /// Use the projector onto qubit 0 = 1 as the observable.
    #[arg(long = "first-qubit")]
    first_qubit: bool,
    #[arg(long, default_value_t = 10_000)]
    shots: usize,
    #[command(flatten)]
    hhl: HhlArgs,
    #[arg(long, visible_alias = "out")]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CostModelArgs {
    /// Matrix dimension.
    #[arg(long = "N")]
    n: f64,
    /// Sparsity.
    #[arg(long)]
    s: f64,
    #[arg(long)]
    t0: f64,
    /// Hamiltonian-simulation error.
    #[arg(long = "epsH")]
    eps_h: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error with its exit status: 1 for domain errors, 2 for input errors.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure {
            code: 2,
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    /// Error raised while reading `path`.
    pub fn in_file(path: &Path, e: hhl_lab::Error) -> Self {
        let code = if e.is_input_error() { 2 } else { 1 };
        Failure {
            code,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<hhl_lab::Error> for Failure {
    fn from(e: hhl_lab::Error) -> Self {
        let code = if e.is_input_error() { 2 } else { 1 };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::SolveGeneral(a) => commands::solve_general(a),
        Command::PhaseScan(a) => commands::phase_scan(a),
        Command::FilterScan(a) => commands::filter_scan(a),
        Command::ErrorScan(a) => commands::error_scan(a),
        Command::Reduce(a) => commands::reduce(a),
        Command::SimulateCircuit(a) => commands::simulate_circuit(a),
        Command::SwapTest(a) => commands::swap_test(a),
        Command::Observe(a) => commands::observe(a),
        Command::CostModel(a) => commands::cost_model(a),
    };
    if cli.timing {
        eprintln!("elapsed: {:.3} s", start.elapsed().as_secs_f64());
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
