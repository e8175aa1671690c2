mod common;

use common::{random_problem, rng};
use ndarray::{Array1, Array2};
use pgw::oracle::{
    brute_force_pgw, enumerate_sub_transport_vertices, enumerate_transport_vertices, OracleConfig,
};
use pgw::*;
use rand::Rng;

#[test]
fn solver_never_beats_oracle() {
    let mut r = rng(11);
    for t in 0..24 {
        let n = r.random_range(1..=3);
        let m = r.random_range(1..=3);
        let lambda = [0.2, 1.0, 10.0][t % 3];
        let problem = random_problem(&mut r, n, m, lambda);
        let oracle = brute_force_pgw(&problem, &OracleConfig::default()).unwrap();
        for variant in [SolverVariant::V1, SolverVariant::V2] {
            let report = solve(&problem, &FwConfig { variant, ..FwConfig::default() }, None).unwrap();
            assert!(report.pgw_value >= oracle.best_value - 1e-9, "instance {t}: {} < {}", report.pgw_value, oracle.best_value);
        }
        assert!(oracle.certificate <= 1e-8);
    }
}

#[test]
fn balanced_lp_matches_vertex_enumeration() {
    let mut r = rng(12);
    for (n, m) in [(2, 3), (3, 4), (3, 3), (4, 4)] {
        for _ in 0..20 {
            let c = Array2::from_shape_fn((n, m), |_| r.random_range(-2.0..2.0));
            let p = Array1::from_shape_fn(n, |_| r.random_range(0.1..1.0));
            let mut q = Array1::from_shape_fn(m, |_| r.random_range(0.1..1.0));
            q *= p.sum() / q.sum();
            let best = enumerate_transport_vertices(p.view(), q.view())
                .unwrap()
                .iter()
                .map(|v| (&c * v).sum())
                .fold(f64::INFINITY, f64::min);
            let inst = LpInstance::new(c.clone(), p.clone(), q.clone()).unwrap();
            for pivot in [PivotRule::Bland, PivotRule::BlockSearch] {
                let sol = solve_ot(&inst, &LpOptions { pivot, ..LpOptions::default() }).unwrap();
                assert_eq!(sol.status, LpStatus::Optimal);
                assert!((sol.objective - best).abs() <= 1e-10, "{} vs {best}", sol.objective);
            }
        }
    }
}

#[test]
fn partial_lp_matches_sub_transport_enumeration() {
    let mut r = rng(13);
    for _ in 0..50 {
        let n = r.random_range(1..=4);
        let m = r.random_range(1..=4);
        let g = Array2::from_shape_fn((n, m), |_| r.random_range(-1.0..1.0));
        let p = Array1::from_shape_fn(n, |_| r.random_range(0.1..1.0));
        let q = Array1::from_shape_fn(m, |_| r.random_range(0.1..1.0));
        let best = enumerate_sub_transport_vertices(p.view(), q.view())
            .unwrap()
            .iter()
            .map(|v| (&g * v).sum())
            .fold(f64::INFINITY, f64::min);
        let sol = solve_pot_linear(g.view(), p.view(), q.view(), true, &LpOptions::default()).unwrap();
        assert!((sol.objective - best).abs() <= 1e-10);
    }
}

#[test]
fn v1_and_v2_agree_on_small_instances() {
    let mut r = rng(14);
    for t in 0..20 {
        let problem = random_problem(&mut r, 4, 6, [0.2, 1.0, 10.0][t % 3]);
        let a = solve_v1(&problem, &FwConfig::default(), None).unwrap();
        let b = solve_v2(&problem, &FwConfig::default(), None).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert!((a.pgw_value - b.pgw_value).abs() <= 1e-9);
    }
}

#[test]
fn first_gap_is_positive_away_from_stationarity() {
    let mut r = rng(15);
    for _ in 0..10 {
        let problem = random_problem(&mut r, 5, 4, 1.0);
        let report = solve_v1(&problem, &FwConfig::default(), None).unwrap();
        assert!(report.gap_trace[0] > 0.0);
    }
}
