use std::f64::consts::LN_2;

use fefwork::entropy::entropy_report;
use fefwork::fef::{conjugate_pair, fef_monte_carlo, fef_see_saw, see_saw_from, twirl, SeeSawOptions};
use fefwork::linalg::{self, CMatrix, C64};
use fefwork::process::{build_fig1_pipeline, replay, Action, Effect, ProcessSpec, Replayer, SignConvention};
use fefwork::qsdp::{q_function, q_function_seeded};
use fefwork::random::{ginibre, haar_unitary, random_state, stream_rng};
use fefwork::state::{fidelity_and_distances, BipartiteState, Party, PureState};
use fefwork::thermo::{
    eq12_extract_lower, eq4_bound, eq6_fef_upper, lemma1_rhs, theorem1_bound, Energy, IsotropicParams,
    TemperatureScale,
};
use proptest::prelude::*;

fn state(seed: u64, d: usize, rank: usize) -> BipartiteState {
    random_state(d, 1 + (rank - 1) % (d * d), &mut stream_rng(seed, 0)).unwrap()
}

fn quick() -> SeeSawOptions {
    SeeSawOptions { restarts: 8, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_states_are_valid(seed in any::<u64>(), d in 2usize..=4, rank in 1usize..=16) {
        let st = state(seed, d, rank);
        prop_assert!(linalg::hermiticity_defect(st.rho()) <= 1e-10);
        prop_assert!((linalg::real_trace(st.rho()) - 1.0).abs() <= 1e-10);
        prop_assert!(st.spectrum()[0] >= -1e-10);
        prop_assert!((linalg::real_trace(&st.marginal(Party::A)) - 1.0).abs() <= 1e-10);
        prop_assert!((linalg::real_trace(&st.marginal(Party::B)) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn marginal_matches_index_sum(seed in any::<u64>(), d in 2usize..=4) {
        let st = state(seed, d, d * d);
        let rho_a = st.marginal(Party::A);
        for x in 0..d {
            for y in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for m in 0..d {
                    acc += st.rho()[(x * d + m, y * d + m)];
                }
                prop_assert!((rho_a[(x, y)] - acc).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn tensor_mixed_product(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let (a, b, c, e) = (ginibre(2, 2, &mut rng), ginibre(2, 2, &mut rng), ginibre(2, 2, &mut rng), ginibre(2, 2, &mut rng));
        let lhs = linalg::tensor(&a, &b) * linalg::tensor(&c, &e);
        let rhs = linalg::tensor(&(&a * &c), &(&b * &e));
        prop_assert!(linalg::max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn eigenvalues_match_quadratic_formula(seed in any::<u64>()) {
        let g = ginibre(2, 2, &mut stream_rng(seed, 0));
        let h = linalg::hermitian_part(&g);
        let (a, dd, b) = (h[(0, 0)].re, h[(1, 1)].re, h[(0, 1)].norm());
        let mid = 0.5 * (a + dd);
        let rad = (0.25 * (a - dd) * (a - dd) + b * b).sqrt();
        let eig = linalg::hermitian_eigen(&h).unwrap();
        prop_assert!((eig.values[0] - (mid - rad)).abs() < 1e-12);
        prop_assert!((eig.values[1] - (mid + rad)).abs() < 1e-12);
        prop_assert!(linalg::max_abs_diff(&eig.reconstruct(), &h) < 1e-9);
    }

    #[test]
    fn norm_ordering(seed in any::<u64>(), n in 2usize..=8) {
        let m = ginibre(n, n, &mut stream_rng(seed, 0));
        let norms = linalg::norms(&m);
        prop_assert!(norms.hs <= norms.trace + 1e-12);
        prop_assert!(norms.op <= norms.hs + 1e-12);
    }

    #[test]
    fn norm_chain(seed in any::<u64>(), d in 2usize..=3, r1 in 1usize..=9, r2 in 1usize..=9) {
        let rho = state(seed, d, r1);
        let sigma = state(seed.wrapping_add(1), d, r2);
        let diff = rho.rho() - sigma.rho();
        let dist = fidelity_and_distances(&rho, &sigma).unwrap();
        let hs = linalg::hs_norm(&diff);
        let tn = linalg::trace_norm(&diff);
        let fid = 2.0 * (1.0 - dist.fidelity.powi(2)).max(0.0).sqrt();
        prop_assert!(hs <= tn + 1e-8);
        prop_assert!(tn <= fid + 1e-8);
        prop_assert!(fid <= 2.0 * dist.bures_distance + 1e-8);
    }

    #[test]
    fn pure_state_fidelity_is_overlap(seed in any::<u64>(), d in 2usize..=3) {
        let mut rng = stream_rng(seed, 0);
        let phi = fefwork::random::haar_pure_state(d, &mut rng);
        let psi = fefwork::random::haar_pure_state(d, &mut rng);
        let dist = fidelity_and_distances(&phi.density(), &psi.density()).unwrap();
        prop_assert!((dist.fidelity - phi.inner(&psi).norm()).abs() < 1e-7);
    }

    #[test]
    fn generalized_cauchy_schwarz(seed in any::<u64>(), n in 2usize..=9) {
        let mut rng = stream_rng(seed, 0);
        let x = ginibre(n, n, &mut rng);
        let y = ginibre(n, n, &mut rng);
        // ‖ |X†Y|^{1/2} ‖₂² through the eigenvalues of |X†Y|
        let m = x.adjoint() * &y;
        let abs = linalg::hermitian_eigen(&linalg::hermitian_part(&(m.adjoint() * &m))).unwrap().map(|v| v.max(0.0).sqrt());
        let root = linalg::hermitian_eigen(&linalg::hermitian_part(&abs)).unwrap().map(|v| v.max(0.0).sqrt());
        let lhs = linalg::hs_norm(&root).powi(2);
        prop_assert!(lhs <= linalg::hs_norm(&x) * linalg::hs_norm(&y) * (1.0 + 1e-10));
    }

    #[test]
    fn trace_modulus_below_trace_norm(seed in any::<u64>(), n in 1usize..=9) {
        let a = ginibre(n, n, &mut stream_rng(seed, 0));
        prop_assert!(a.trace().norm() <= linalg::trace_norm(&a) * (1.0 + 1e-12));
    }

    #[test]
    fn entropy_inequalities(seed in any::<u64>(), d in 2usize..=4, rank in 1usize..=16) {
        let st = state(seed, d, rank);
        let e = entropy_report(&st).unwrap();
        let l = (d as f64).log2();
        prop_assert!((e.s_a - e.s_b).abs() <= e.s + 1e-9);
        prop_assert!(e.s <= e.s_a + e.s_b + 1e-9);
        prop_assert!(e.s_a_given_b >= -l - 1e-9 && e.s_a_given_b <= l + 1e-9);
        prop_assert!(e.h_min_lower <= e.s + 1e-9);
        let mut rng = stream_rng(seed, 1);
        let moved = st.local_unitary(&haar_unitary(d, &mut rng), &haar_unitary(d, &mut rng));
        prop_assert!((entropy_report(&moved).unwrap().s - e.s).abs() < 1e-9);
    }

    #[test]
    fn twirl_is_idempotent_and_keeps_overlap(seed in any::<u64>(), d in 2usize..=4, rank in 1usize..=16) {
        let st = state(seed, d, rank);
        let iso = twirl(&st);
        let twirled = iso.state();
        prop_assert!((twirled.singlet_overlap() - st.singlet_overlap()).abs() < 1e-10);
        prop_assert!((twirl(&twirled).p - iso.p).abs() < 1e-10);
        let u = haar_unitary(d, &mut stream_rng(seed, 1));
        prop_assert!(linalg::max_abs_diff(conjugate_pair(&twirled, &u).rho(), twirled.rho()) < 1e-12);
    }

    #[test]
    fn isotropic_round_trip(d in 2usize..=4, t in 0.0f64..=1.0) {
        let (lo, _) = IsotropicParams::p_range(d);
        let params = IsotropicParams::new(d, lo + t * (1.0 - lo)).unwrap();
        prop_assert!((twirl(&params.state()).p - params.p).abs() < 1e-10);
        prop_assert!((params.fef() - params.state().op_norm()).abs() < 1e-10);
    }

    #[test]
    fn eq6_inverts_theorem1(d in 2usize..=6, t in 1e-9f64..=1.0, kbt in 0.01f64..100.0) {
        let f = 1.0 / d as f64 + t * (1.0 - 1.0 / d as f64);
        let scale = TemperatureScale::new(kbt).unwrap();
        let w = theorem1_bound(f, d, scale).unwrap();
        prop_assert!((eq6_fef_upper(w, d) - f).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn see_saw_trajectories_never_decrease(seed in any::<u64>(), d in 2usize..=3, rank in 1usize..=9) {
        let st = state(seed, d, rank);
        let run = see_saw_from(&st, haar_unitary(d, &mut stream_rng(seed, 9)), 200, 0.0);
        for pair in run.trajectory.windows(2) {
            prop_assert!(pair[1] >= pair[0] - 1e-12);
        }
    }

    #[test]
    fn see_saw_dominates_sampling(seed in any::<u64>(), rank in 1usize..=4) {
        let st = state(seed, 2, rank);
        let fef = fef_see_saw(&st, &SeeSawOptions::default(), seed).unwrap();
        prop_assert!(fef.value >= fef_monte_carlo(&st, 2000, seed) - 1e-7);
        prop_assert!(fef.value >= st.singlet_overlap() - 1e-12);
        let recomputed = fefwork::fef::overlap(&st, &fef.optimal_u);
        prop_assert!((recomputed - fef.value).abs() < 1e-9);
    }

    #[test]
    fn two_copies_are_supermultiplicative(seed in any::<u64>(), rank in 1usize..=4) {
        let st = state(seed, 2, rank);
        let single = fef_see_saw(&st, &quick(), seed).unwrap().value;
        let double = fef_see_saw(&st.two_copy(), &quick(), seed).unwrap().value;
        prop_assert!(double >= single * single - 1e-6);
    }

    #[test]
    fn q_certificates(seed in any::<u64>(), d in 2usize..=3, rank in 1usize..=9) {
        let st = state(seed, d, rank);
        let fef = fef_see_saw(&st, &quick(), seed).unwrap();
        let q = q_function_seeded(&st, 1e-8, &fef);
        prop_assert!(q.q_primal <= q.q_dual + 1e-7);
        prop_assert!(q.q_primal >= fef.value - 1e-7);
        prop_assert!((q.h_min + (q.q_dual * d as f64).log2()).abs() < 1e-12);
        prop_assert!(q.h_min <= -(fef.value * d as f64).log2() + 1e-6);
        prop_assert!((q.h_min < 0.0) == (q.q_dual > 1.0 / d as f64));
        prop_assert!(q.channel.trace_preservation_defect() <= 1e-8);
        let e = entropy_report(&st).unwrap();
        prop_assert!(q.h_min <= e.s_a_given_b + 1e-6);
    }

    #[test]
    fn q_is_lipschitz_in_hilbert_schmidt_norm(seed in any::<u64>(), d in 2usize..=3, r1 in 1usize..=9, r2 in 1usize..=9) {
        let rho = state(seed, d, r1);
        let sigma = state(seed.wrapping_add(1), d, r2);
        let (a, b) = (q_function(&rho, 1e-8), q_function(&sigma, 1e-8));
        let hs = linalg::hs_norm(&(rho.rho() - sigma.rho()));
        prop_assert!((a.q_dual - b.q_dual).abs() <= hs + a.gap + b.gap + 1e-6);
    }

    #[test]
    fn thermo_bounds_consistent(seed in any::<u64>(), d in 2usize..=3, rank in 1usize..=9) {
        let st = state(seed, d, rank);
        let e = entropy_report(&st).unwrap();
        let t = TemperatureScale::default();
        let eq4 = eq4_bound(&e, t);
        prop_assert!((eq4.in_kbt - e.s_a_given_b * LN_2).abs() < 1e-15);
        let eq12 = eq12_extract_lower(&e, d, t);
        prop_assert!(eq12.in_kbt >= -1e-12);
    }

    #[test]
    fn ledgers_add_over_segments(seed in any::<u64>(), split in 0usize..=5) {
        let st = state(seed, 2, 1 + (seed % 4) as usize);
        let t = TemperatureScale::default();
        let spec = build_fig1_pipeline(&st, Energy::from_kbt_units(0.3, t), t).unwrap();
        let whole = replay(&spec, t, SignConvention::default()).unwrap();
        let again = replay(&spec, t, SignConvention::default()).unwrap();
        prop_assert_eq!(&whole, &again);

        let (head, tail) = spec.actions.split_at(split);
        let mut first = Replayer::new(st.clone(), spec.hamiltonian.clone(), t, SignConvention::default()).unwrap();
        for a in head {
            first.apply(a).unwrap();
        }
        let mut second = Replayer::new(first.state().clone(), first.hamiltonian().clone(), t, SignConvention::default()).unwrap();
        for a in tail {
            second.apply(a).unwrap();
        }
        let sum = first.ledger(&st).total.in_kbt + second.ledger(&st).total.in_kbt;
        prop_assert!((sum - whole.total.in_kbt).abs() < 1e-12);
    }

    #[test]
    fn fig1_total_matches_closed_form(seed in any::<u64>(), d in 2usize..=3, rank in 1usize..=9, w in -2.0f64..2.0) {
        let st = state(seed, d, rank);
        let t = TemperatureScale::new(2.5).unwrap();
        let e = entropy_report(&st).unwrap();
        let ledger = replay(&build_fig1_pipeline(&st, Energy::from_kbt_units(w, t), t).unwrap(), t, SignConvention::default()).unwrap();
        let expected = ((d * d) as f64).ln() - e.s_min * LN_2 + w;
        prop_assert!((ledger.total.in_kbt - expected).abs() < 1e-12);
        prop_assert!((ledger.total.value() - 2.5 * expected).abs() < 1e-11);
    }
}

#[test]
fn q_is_not_lipschitz_with_inverse_dimension_factor() {
    // Bell state against its dephased version: Q drops from 1 to 1/2 while
    // (1/d)‖Δρ‖₂ is only √2/4.
    let bell = BipartiteState::singlet(2);
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = C64::new(0.5, 0.0);
    m[(3, 3)] = C64::new(0.5, 0.0);
    let dephased = BipartiteState::new(2, m).unwrap();
    let dq = q_function(&bell, 1e-10).q_dual - q_function(&dephased, 1e-10).q_dual;
    let hs = linalg::hs_norm(&(bell.rho() - dephased.rho()));
    assert!((dq - 0.5).abs() < 1e-8);
    assert!((hs - 0.5f64.sqrt()).abs() < 1e-12);
    assert!(dq > hs / 2.0 + 0.1);
    assert!(dq <= hs);
}

#[test]
fn von_neumann_form_of_lemma1_fails_at_single_copy() {
    // ρ_iso(1/2) at d = 2 has F = 0.625 > 1/2, yet S(A|B) = +0.549 is far above -log₂(1.25).
    let st = IsotropicParams::new(2, 0.5).unwrap().state();
    let e = entropy_report(&st).unwrap();
    let f = fef_see_saw(&st, &quick(), 0).unwrap().value;
    let rhs = lemma1_rhs(f, 2).unwrap();
    assert!((e.s_a_given_b - 0.54879).abs() < 1e-5);
    assert!((rhs + 0.32193).abs() < 1e-5);
    assert!(e.s_a_given_b > rhs);
    let eq4 = eq4_bound(&e, TemperatureScale::default()).in_kbt;
    let thm1 = theorem1_bound(f, 2, TemperatureScale::default()).unwrap().in_kbt;
    assert!(eq4 > -thm1);
    // The min-entropy form is a single-copy truth.
    let q = q_function(&st, 1e-10);
    assert!(q.h_min <= rhs + 1e-8);
}

#[test]
fn pure_product_example_for_twirl_cost() {
    let zero = nalgebra::dvector![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let plus = nalgebra::dvector![C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
    let phi = PureState::product(&zero, &plus).unwrap();
    let iso = twirl(&phi.density());
    assert!(iso.p.abs() < 1e-15);
    assert!((iso.fef() - 0.25).abs() < 1e-15);
}

#[test]
fn delta_steps_compound() {
    let st = BipartiteState::singlet(2);
    let actions = vec![
        Action::DeltaApprox { target_state: None, delta: 0.1 },
        Action::UnitaryOp { description: "noop".into(), declared_work: 0.0, success_prob: 0.5, effect: Effect::Identity },
        Action::DeltaApprox { target_state: None, delta: 0.2 },
    ];
    let ledger = replay(&ProcessSpec::new(st, actions), TemperatureScale::default(), SignConvention::default()).unwrap();
    assert!((ledger.success_prob - 0.9 * 0.5 * 0.8).abs() < 1e-15);
}

proptest! {
    #[test]
    fn isotropic_thresholds_are_ordered(d in 2usize..=64, kbt in 0.01f64..100.0) {
        let th = fefwork::thermo::isotropic_thresholds(d, TemperatureScale::new(kbt).unwrap()).unwrap();
        prop_assert!(th.fef_entanglement < th.fef_lhs_povm);
        prop_assert!(th.fef_lhs_povm < th.fef_lhs_projective);
        prop_assert!(th.fef_lhs_projective <= 1.0);
        prop_assert!(th.w_lhs_povm.in_kbt > 0.0 && th.w_lhs_povm.in_kbt < th.w_lhs_projective.in_kbt);
    }
}
