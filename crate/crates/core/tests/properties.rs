use hhl_lab::filters::{FilterSpec, FlagMap};
use hhl_lab::hhl::{full_layout, u_invert_adjoint_op, u_invert_op};
use hhl_lab::io::{format_sparse_hermitian, format_vector, parse_sparse_hermitian, parse_vector};
use hhl_lab::linalg::eig_hermitian;
use hhl_lab::observables::swap_test;
use hhl_lab::phase_est::{alpha_closed_form, alpha_series, PhaseEstConfig};
use hhl_lab::qstate::{prepare_amplitudes, state_distance, QuantumState, RegisterLayout};
use hhl_lab::{random, Complex64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn qft_round_trip(seed in any::<u64>(), log_t in 1u32..7, n in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = 1usize << log_t;
        let layout = RegisterLayout::new([("a", n), ("C", t)]).unwrap();
        let s = QuantumState::new(layout, random::state_vector(n * t, &mut rng)).unwrap();
        let back = s.qft("C").unwrap().inverse_qft("C").unwrap();
        prop_assert!(state_distance(&s, &back).unwrap() < 1e-12);
    }

    #[test]
    fn u_invert_preserves_norm_and_inverts(seed in any::<u64>(), kappa in 1.5f64..6.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::hermitian_with_norm_at_most_one(3, &mut rng);
        let eig = eig_hermitian(&a);
        let pe = PhaseEstConfig::new(64, 4.0).unwrap();
        let spec = FilterSpec::filtered(kappa).unwrap();
        let s = QuantumState::new(full_layout(64, 3).unwrap(), random::state_vector(64 * 9, &mut rng)).unwrap();
        let out = u_invert_op(&s, &eig, &pe, &spec).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-10);
        let back = u_invert_adjoint_op(&out, &eig, &pe, &spec).unwrap();
        prop_assert!(state_distance(&s, &back).unwrap() < 1e-10);
    }

    #[test]
    fn flag_states_are_unit(kappa in 1.0f64..50.0, lambda in -2.0f64..2.0) {
        let spec = FilterSpec::filtered(kappa).unwrap();
        let h = spec.flag(lambda).unwrap();
        prop_assert!((h.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_forms_agree(delta in -200.0f64..200.0, log_t in 4u32..9) {
        let t = 1usize << log_t;
        prop_assert!((alpha_closed_form(delta, t) - alpha_series(delta, t)).norm() < 1e-9);
    }

    #[test]
    fn swap_accept_formula(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = prepare_amplitudes("x", &random::state_vector(n, &mut rng)).unwrap();
        let b = prepare_amplitudes("x", &random::state_vector(n, &mut rng)).unwrap();
        let r = swap_test(&a, &b, 0, &mut rng).unwrap();
        prop_assert!((r.accept_probability - (1.0 + r.overlap_exact) / 2.0).abs() <= 1e-12);
    }

    #[test]
    fn matrix_file_round_trip(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::hermitian_with_norm_at_most_one(n, &mut rng);
        let back = parse_sparse_hermitian(&format_sparse_hermitian(&a)).unwrap();
        prop_assert_eq!(a.to_dense(), back.to_dense());
        let v: Vec<Complex64> = random::state_vector(n, &mut rng);
        prop_assert_eq!(parse_vector(&format_vector(&v)).unwrap(), v);
    }
}
