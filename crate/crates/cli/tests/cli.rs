use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SUBCOMMANDS: [&str; 10] = [
    "solve",
    "solve-general",
    "phase-scan",
    "filter-scan",
    "error-scan",
    "reduce",
    "simulate-circuit",
    "swap-test",
    "observe",
    "cost-model",
];

fn hhl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hhl"))
        .args(args)
        .output()
        .expect("spawn hhl")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

#[test]
fn help_texts_match_golden_files() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut cases = vec![("hhl".to_string(), hhl(&["--help"]))];
    for c in SUBCOMMANDS {
        cases.push((c.to_string(), hhl(&[c, "--help"])));
    }
    for (name, out) in cases {
        assert!(out.status.success());
        let path = golden_dir().join(format!("{name}.txt"));
        if update {
            std::fs::write(&path, &out.stdout).unwrap();
        }
        let want = std::fs::read_to_string(&path).unwrap();
        assert_eq!(String::from_utf8_lossy(&out.stdout), want, "{name}");
    }
}

#[test]
fn solve_diagonal_fixture() {
    let out = hhl(&[
        "solve",
        "--matrix",
        &fixture("diag.mtx"),
        "--rhs",
        &fixture("rhs.vec"),
        "--t0",
        "10000",
    ]);
    let r = json(&out);
    assert!(r["distance"].as_f64().unwrap() <= 1e-3);
    let x = &r["exact_vector"];
    assert!((x[0][0].as_f64().unwrap() - 1.0 / 5f64.sqrt()).abs() < 1e-12);
    assert!((x[1][0].as_f64().unwrap() - 2.0 / 5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn floats_carry_17_significant_digits() {
    let out = hhl(&[
        "cost-model",
        "--N",
        "1e6",
        "--s",
        "8",
        "--t0",
        "1e3",
        "--epsH",
        "1e-6",
    ]);
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.contains("\"s\":8.0000000000000000e0"), "{text}");
    let r = json(&out);
    let cost = r["cost"].as_f64().unwrap();
    assert!(cost.is_finite() && cost > 0.0);
    assert_eq!(r["log_star_N"], 5);
}

#[test]
fn error_scan_rows_are_monotone() {
    let out = hhl(&["error-scan", "--t0", "200,400,800,1600"]);
    assert!(out.status.success());
    let mut rd = csv::Reader::from_reader(out.stdout.as_slice());
    let col = rd
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == "distance")
        .unwrap();
    let d: Vec<f64> = rd
        .records()
        .map(|r| r.unwrap()[col].parse().unwrap())
        .collect();
    assert_eq!(d.len(), 4);
    assert!(d.windows(2).all(|w| w[1] <= w[0]), "{d:?}");
}

#[test]
fn scans_have_declared_columns() {
    let out = hhl(&["phase-scan", "--clock-dims", "32,64", "--points", "5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("delta,T,re_alpha,im_alpha,abs2_alpha,bound")
    );
    assert_eq!(lines.count(), 10);
    let out = hhl(&["filter-scan", "--kappa", "4", "--points", "11"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("lambda,f,g,f2_plus_g2,dh_norm\n"));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn circuit_commands() {
    let r = json(&hhl(&[
        "reduce",
        "--circuit",
        &fixture("bell.circ"),
        "--emit",
        "stats",
    ]));
    assert_eq!(r["dim"], 24);
    assert!(r["unitary_period_defect"].as_f64().unwrap() <= 1e-9);
    let diff = r["window_probability"].as_f64().unwrap()
        - r["window_probability_formula"].as_f64().unwrap();
    assert!(diff.abs() <= 1e-10);

    let out = hhl(&[
        "reduce",
        "--circuit",
        &fixture("bell.circ"),
        "--emit",
        "matrix",
    ]);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("24 24\n"));

    let r = json(&hhl(&[
        "simulate-circuit",
        "--circuit",
        &fixture("bell.circ"),
        "--shots",
        "10000",
    ]));
    assert!(r["z_score"].as_f64().unwrap() <= 3.0);
}

#[test]
fn reduced_matrix_feeds_solve_general() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.mtx");
    let b = dir.path().join("b.vec");
    let circ = fixture("bell.circ");
    for (emit, path) in [("matrix", &a), ("rhs", &b)] {
        let out = hhl(&[
            "reduce",
            "--circuit",
            &circ,
            "--emit",
            emit,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let r = json(&hhl(&[
        "solve-general",
        "--matrix",
        a.to_str().unwrap(),
        "--rhs",
        b.to_str().unwrap(),
        "--t0",
        "100",
    ]));
    assert_eq!(r["rows"], 24);
    assert!(r["distance_system"].as_f64().unwrap() < 0.1);
}

#[test]
fn swap_test_and_observe() {
    let r = json(&hhl(&[
        "swap-test",
        "--state-a",
        &fixture("a.vec"),
        "--state-b",
        &fixture("b.vec"),
    ]));
    assert!((r["overlap_exact"].as_f64().unwrap() - 0.64).abs() < 1e-12);
    let est = r["estimate"].as_f64().unwrap();
    assert!((est - 0.64).abs() <= 3.0 * r["stderr"].as_f64().unwrap());

    let r = json(&hhl(&[
        "observe",
        "--matrix",
        &fixture("diag.mtx"),
        "--rhs",
        &fixture("rhs.vec"),
        "--M",
        &fixture("z.obs"),
        "--t0",
        "1000",
    ]));
    // x ∝ (1, 2): <Z> = (1 − 4)/5.
    assert!((r["exact_on_ideal_solution"].as_f64().unwrap() + 0.6).abs() < 1e-12);
    let z = (r["estimate"].as_f64().unwrap() - r["exact"].as_f64().unwrap()).abs()
        / r["stderr"].as_f64().unwrap();
    assert!(z <= 3.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mtx");
    std::fs::write(&bad, "2 1\n0 0 1 0\n1 1 zero 0\n").unwrap();
    let out = hhl(&[
        "solve",
        "--matrix",
        bad.to_str().unwrap(),
        "--rhs",
        &fixture("rhs.vec"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 3"), "{msg}");

    let out = hhl(&[
        "solve",
        "--matrix",
        "/nonexistent/a.mtx",
        "--rhs",
        &fixture("rhs.vec"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(hhl(&["solve", "--bogus"]).status.code(), Some(2));
    assert_eq!(hhl(&["frobnicate"]).status.code(), Some(2));

    let out = hhl(&[
        "cost-model",
        "--N",
        "16",
        "--s",
        "1",
        "--t0",
        "1",
        "--epsH",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let big = dir.path().join("big.mtx");
    std::fs::write(&big, "1 1\n0 0 3 0\n").unwrap();
    let one = dir.path().join("one.vec");
    std::fs::write(&one, "1\n1 0\n").unwrap();
    let out = hhl(&[
        "solve",
        "--matrix",
        big.to_str().unwrap(),
        "--rhs",
        one.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn dump_state_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("x.state");
    let out = hhl(&[
        "solve",
        "--matrix",
        &fixture("diag.mtx"),
        "--rhs",
        &fixture("rhs.vec"),
        "--t0",
        "50",
        "--dump-state",
        dump.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&dump).unwrap();
    assert!(text.starts_with("C:1024,sys:2,S:3\n"), "{}", &text[..40]);
    let r = json(&hhl(&[
        "swap-test",
        "--state-a",
        dump.to_str().unwrap(),
        "--state-b",
        dump.to_str().unwrap(),
    ]));
    assert!((r["accept_probability"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}
