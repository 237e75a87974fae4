use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use serial_consensus::dynamics::{
    assemble, expm_oracle, simulate, theorem1_bound, verify_transient, Disturbance, XiState,
};
use serial_consensus::formation::{
    disturbance_vector, simulate_formation, theorem2_constants, DisturbanceSpec, FormationScenario, PiGains,
};
use serial_consensus::graphs::{
    has_directed_spanning_tree, inf_norm, kron, path_ahead_laplacian, random_digraph, DirectedGraph,
};
use serial_consensus::spectra::{companion, optimal_condition, vandermonde_diagonalization, PoleSet};

fn poles(max_order: usize) -> impl Strategy<Value = PoleSet> {
    poles_in(1..=max_order)
}

fn poles_in(orders: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = PoleSet> {
    prop::collection::vec(-3.0f64..3.0, orders).prop_filter_map("poles too close", |logs| {
        let mut p: Vec<f64> = logs.into_iter().map(f64::exp).collect();
        p.sort_by(f64::total_cmp);
        if p.windows(2).all(|w| w[1] > 1.05 * w[0]) {
            PoleSet::new(&p).ok()
        } else {
            None
        }
    })
}

fn matrix(max_dim: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
        prop::collection::vec(-5.0f64..5.0, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
    })
}

/// Number of eigenvalues of `m` within `tol` of zero and whether the rest
/// have positive real part.
fn zero_eigen_structure(m: &DMatrix<f64>, tol: f64) -> (usize, bool) {
    let eig = m.complex_eigenvalues();
    let zeros = eig.iter().filter(|z| z.norm() < tol).count();
    let rest_positive = eig.iter().filter(|z| z.norm() >= tol).all(|z| z.re > 0.0);
    (zeros, rest_positive)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_rows_sum_to_zero(seed in any::<u64>(), n in 1usize..12, p in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = random_digraph(n, p, &mut rng).unwrap().laplacian();
        let ones = DVector::from_element(n, 1.0);
        prop_assert!(inf_norm(&(l.matrix() * ones)) <= 1e-12);
    }

    #[test]
    fn reachability_agrees_with_spectrum(seed in any::<u64>(), n in 1usize..=8, p in 0.05f64..0.6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_digraph(n, p, &mut rng).unwrap();
        let (zeros, rest_positive) = zero_eigen_structure(g.laplacian().matrix(), 1e-7);
        prop_assert_eq!(has_directed_spanning_tree(&g), zeros == 1 && rest_positive);
    }

    #[test]
    fn kron_norm_is_multiplicative(a in matrix(4), b in matrix(4)) {
        let lhs = inf_norm(&kron(&a, &b));
        let rhs = inf_norm(&a) * inf_norm(&b);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn companion_roots_are_negated_poles(ps in poles(6)) {
        let eig = companion(&ps).into_inner().complex_eigenvalues();
        for &p in ps.poles() {
            let closest = eig.iter().map(|z| ((z.re + p).powi(2) + z.im.powi(2)).sqrt()).fold(f64::INFINITY, f64::min);
            prop_assert!(closest <= 1e-8 * p, "pole {} off by {}", p, closest);
        }
    }

    #[test]
    fn diagonalization_residual_is_small(ps in poles(5)) {
        let a = companion(&ps).into_inner();
        let d = vandermonde_diagonalization(&ps);
        let lambda = DMatrix::from_diagonal(&DVector::from_column_slice(d.eigenvalues()));
        let residual = inf_norm(&(&a * d.s() - d.s() * lambda));
        prop_assert!(residual <= 1e-9 * inf_norm(&a));
    }

    #[test]
    fn no_scaling_beats_the_optimum(ps in poles(5), logs in prop::collection::vec(prop::collection::vec(-6.0f64..6.0, 5), 50)) {
        let d = vandermonde_diagonalization(&ps);
        let opt = optimal_condition(&d).unwrap().optimal_bound;
        for l in logs {
            let k: Vec<f64> = l[..ps.order()].iter().map(|v| v.exp()).collect();
            prop_assert!(d.rescaled(&k).unwrap().condition() >= opt - 1e-9);
        }
    }

    #[test]
    fn optimum_ignores_column_scaling_and_order(ps in poles(5), logs in prop::collection::vec(-4.0f64..4.0, 5), signs in prop::collection::vec(any::<bool>(), 5), rot in 0usize..5) {
        let d = vandermonde_diagonalization(&ps);
        let n = ps.order();
        let base = optimal_condition(&d).unwrap().optimal_bound;
        let k: Vec<f64> = (0..n).map(|i| if signs[i] { -logs[i].exp() } else { logs[i].exp() }).collect();
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let other = optimal_condition(&d.rescaled(&k).unwrap().permuted(&perm).unwrap()).unwrap().optimal_bound;
        prop_assert!((base - other).abs() <= 1e-12 * base);
    }

    #[test]
    fn two_pole_optimum_has_closed_form(p1 in 0.05f64..20.0, p2 in 0.05f64..20.0) {
        prop_assume!((p1 - p2).abs() >= 0.05);
        let ps = PoleSet::new(&[p1, p2]).unwrap();
        let got = optimal_condition(&vandermonde_diagonalization(&ps)).unwrap().optimal_bound;
        let want = (p1 + p2 + 2.0 * (p1 * p2).max(1.0)) / (p1 - p2).abs();
        prop_assert!((got - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn optimal_bound_never_exceeds_raw(ps in poles(5)) {
        let b = theorem1_bound(&ps, true).unwrap();
        prop_assert!(b.optimal <= b.raw * (1.0 + 1e-12));
        prop_assert!(b.optimal >= 1.0 - 1e-12);
    }

    #[test]
    fn pi_gains_are_vieta_coefficients(ps in poles_in(3..=3)) {
        let g = PiGains::from_poles(&ps).unwrap();
        let p = ps.poles();
        prop_assert!((g.a_v - (p[0] + p[1] + p[2])).abs() <= 1e-12 * g.a_v);
        prop_assert!((g.a_p - (p[0] * p[1] + p[0] * p[2] + p[1] * p[2])).abs() <= 1e-12 * g.a_p);
        prop_assert!((g.a_i - p[0] * p[1] * p[2]).abs() <= 1e-12 * g.a_i);
    }

    #[test]
    fn load_enters_integral_block(ps in poles_in(3..=3)) {
        let a = companion(&ps).into_inner();
        let x = -a.try_inverse().unwrap() * DVector::from_column_slice(&[0.0, 0.0, 1.0]);
        let a_i = ps.coefficients()[0];
        prop_assert!((x[0] - 1.0 / a_i).abs() <= 1e-12 * (1.0 / a_i).max(1.0));
        prop_assert!(x[1].abs() <= 1e-12 && x[2].abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exponential_of_weighted_laplacian_contracts(seed in any::<u64>(), n in 2usize..=8, m in 1usize..=3, t in -3.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = random_digraph(n, 0.4, &mut rng).unwrap().laplacian();
        let p = DMatrix::from_diagonal(&DVector::from_fn(m, |i, _| 0.2 + i as f64));
        let e = expm_oracle(&-kron(&p, l.matrix()), 10f64.powf(t)).unwrap();
        prop_assert!(inf_norm(&e) <= 1.0 + 1e-9);
    }

    #[test]
    fn consensus_states_are_equilibria(ps in poles(4), c in -10.0f64..10.0, n in 1usize..8) {
        let sys = assemble(&ps, &path_ahead_laplacian(n).unwrap());
        let mut blocks = vec![DVector::zeros(n); ps.order()];
        blocks[0] = DVector::from_element(n, c);
        let xi = XiState::from_blocks(&blocks).unwrap();
        prop_assert!(inf_norm(&(sys.state_matrix() * xi.values())) <= 1e-12);
    }

    #[test]
    fn leader_ignores_followers(ps in poles_in(3..=3), seed in any::<u64>(), n in 2usize..6) {
        let l = path_ahead_laplacian(n).unwrap();
        let sys = assemble(&ps, &l);
        let m = sys.state_matrix();
        for k in 0..3 {
            prop_assert!(m.row(k * n).iter().all(|&v| v == 0.0));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xi0 = XiState::random(&sys, &mut rng);
        let traj = simulate(&sys, &xi0, &Disturbance::None, 2.0, 1e-2).unwrap();
        for state in traj.states() {
            for k in 0..3 {
                prop_assert_eq!(state[k * n], xi0.values()[k * n]);
            }
        }
    }

    #[test]
    fn transients_respect_the_bound(ps in poles(4), seed in any::<u64>(), n in 1usize..6, random_graph in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = if random_graph {
            serial_consensus::graphs::random_spanning_digraph(n, 0.3, &mut rng).unwrap().laplacian()
        } else {
            path_ahead_laplacian(n).unwrap()
        };
        let sys = assemble(&ps, &l);
        let bound = theorem1_bound(&ps, true).unwrap();
        let xi0 = XiState::random(&sys, &mut rng);
        let traj = simulate(&sys, &xi0, &Disturbance::None, (10.0 / ps.min_pole()).min(60.0), 2e-3).unwrap();
        prop_assert!(verify_transient(&traj, &bound, &xi0).unwrap().holds);
    }
}

#[test]
fn path_graph_has_spanning_tree_and_empty_graph_does_not() {
    assert!(has_directed_spanning_tree(&DirectedGraph::path_ahead(5).unwrap()));
    assert!(!has_directed_spanning_tree(&DirectedGraph::empty(2).unwrap()));
    assert!(has_directed_spanning_tree(&DirectedGraph::empty(1).unwrap()));
}

#[test]
fn integral_state_settles_on_shifted_load() {
    // z -> w0 / a_I up to a multiple of 1, e_pos -> 0, L v -> 0.
    let ps = PoleSet::new(&[1.0, 2.0, 3.0]).unwrap();
    let l = path_ahead_laplacian(4).unwrap();
    let w0 = DVector::from_column_slice(&[0.5, -1.0, 2.0, 0.0]);
    let s = FormationScenario::velocity_step(ps.clone(), l.clone(), 3.0)
        .unwrap()
        .with_disturbance(DisturbanceSpec::LaplacianImage { w0: w0.clone() });
    let run = simulate_formation(&s, 60.0, 1e-3, 1000).unwrap();
    let last = run.trajectory.len() - 1;
    let z = run.trajectory.block(last, 0).into_owned();
    let offset = &z - &w0 / ps.coefficients()[0];
    let spread = offset.max() - offset.min();
    assert!(spread < 1e-6, "spread {spread}");
    assert!(inf_norm(&run.trajectory.block(last, 1)) < 1e-6);
    assert!(inf_norm(&(l.matrix() * run.trajectory.block(last, 2))) < 1e-6);
}

#[test]
fn forced_bound_grows_with_chain_length_under_hill_load() {
    let ps = PoleSet::new(&[1.0 / 3.0, 1.0, 3.0]).unwrap();
    let c = theorem2_constants(&ps, true).unwrap();
    let rhs: Vec<f64> = [5, 10, 20, 40]
        .iter()
        .map(|&n| {
            let l = path_ahead_laplacian(n).unwrap();
            let load = disturbance_vector(&DisturbanceSpec::Hill { theta: 0.1, g: 9.8 }, &l).unwrap();
            c.alpha_w * inf_norm(&load.w0.unwrap())
        })
        .collect();
    assert!(rhs.windows(2).all(|w| w[1] > 1.5 * w[0]), "{rhs:?}");
}

#[test]
fn velocity_step_ratio_does_not_depend_on_chain_length() {
    let ps = PoleSet::new(&[3.0, 1.0, 1.0 / 3.0]).unwrap();
    let bound = theorem1_bound(&ps, true).unwrap().value;
    for n in [10, 40] {
        let s = FormationScenario::velocity_step(ps.clone(), path_ahead_laplacian(n).unwrap(), 10.0).unwrap();
        let run = simulate_formation(&s, 60.0, 1e-3, 1000).unwrap();
        let ratio = run.trajectory.sup_norm() / run.initial.norm();
        assert!(ratio <= bound * (1.0 + 1e-6), "N = {n}: {ratio} > {bound}");
    }
}
