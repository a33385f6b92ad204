mod common;

use common::{cancellation_lp_by_vertices, measure_1d, min_over_bases, random_measure};
use gwnorm::flatnorm::{
    dual_value, gw_distance, gw_distance_exact, gw_distance_with, signed_composites,
    signed_distance, solve_transportation, w1_classic, Engine, NormParams,
};
use gwnorm::SignedMeasure;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn transportation_matches_basis_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..4 {
        let (m, n) = (5, 5);
        let costs: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(0.0..3.0)).collect())
            .collect();
        let mut supplies: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..2.0)).collect();
        let demands: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        // Rebalance the last supply so totals agree exactly.
        let d: f64 = demands.iter().sum();
        let s: f64 = supplies[..m - 1].iter().sum();
        supplies[m - 1] = d - s;
        if supplies[m - 1] <= 0.0 {
            continue;
        }
        let plan = solve_transportation(&costs, &supplies, &demands).unwrap();

        // Equality system without the (redundant) last demand row.
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..m {
            let mut row = vec![0.0; m * n];
            (0..n).for_each(|j| row[i * n + j] = 1.0);
            a.push(row);
            b.push(supplies[i]);
        }
        for j in 0..n - 1 {
            let mut row = vec![0.0; m * n];
            (0..m).for_each(|i| row[i * n + j] = 1.0);
            a.push(row);
            b.push(demands[j]);
        }
        let c: Vec<f64> = costs.iter().flatten().copied().collect();
        let oracle = min_over_bases(&c, &a, &b);
        assert!(
            (plan.objective - oracle).abs() <= 1e-9 * oracle.max(1.0),
            "{} vs {}",
            plan.objective,
            oracle
        );
        for (i, row) in plan.flow.iter().enumerate() {
            assert!((row.iter().sum::<f64>() - supplies[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn split_example_matches_vertex_enumeration() {
    let mu = measure_1d(&[(0.0, 2.0)]);
    let nu = measure_1d(&[(-1.0, 1.0), (1.0, 1.0)]);
    let oracle = cancellation_lp_by_vertices(&mu, &nu, 1.0, 1.0);
    assert!((oracle - 2.0).abs() < 1e-12);
    let p = NormParams::new(1.0, 1.0).unwrap();
    assert_eq!(gw_distance(&mu, &nu, p).unwrap().0, 2.0);
}

#[test]
fn small_instances_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..60 {
        let dim = 1 + trial % 2;
        let (m, n) = (rng.random_range(1..4), rng.random_range(1..4));
        let mu = random_measure(&mut rng, dim, m, true);
        let nu = random_measure(&mut rng, dim, n, true);
        let p = NormParams::new(rng.random_range(0.2..2.0), rng.random_range(0.2..3.0)).unwrap();
        let oracle = cancellation_lp_by_vertices(&mu, &nu, p.a, p.b);
        let engines: &[Engine] = if dim == 1 {
            &[Engine::Line, Engine::Bipartite]
        } else {
            &[Engine::Bipartite]
        };
        for &engine in engines {
            let (v, sol) = gw_distance_with(&mu, &nu, p, engine).unwrap();
            assert!(
                (v - oracle).abs() <= 1e-9 * oracle.max(1.0),
                "{engine:?}: {v} vs {oracle}"
            );
            for f in &sol.flow {
                assert!(f.mass >= 0.0);
            }
            for i in 0..mu.len() {
                let row: f64 = sol
                    .flow
                    .iter()
                    .filter(|f| f.source == i)
                    .map(|f| f.mass)
                    .sum();
                assert!(row <= mu.weight(i) + 1e-12);
            }
        }
    }
}

#[test]
fn float_solvers_match_exact_rational_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..40 {
        let dim = 1 + trial % 2;
        let (m, n) = (rng.random_range(1..9), rng.random_range(1..9));
        let mu = random_measure(&mut rng, dim, m, true);
        let nu = random_measure(&mut rng, dim, n, true);
        let p = NormParams::new(rng.random_range(0.1..3.0), rng.random_range(0.1..3.0)).unwrap();
        let exact = gw_distance_exact(&mu, &nu, p).unwrap().to_f64().unwrap();
        let (v, _) = gw_distance_with(&mu, &nu, p, Engine::Bipartite).unwrap();
        assert!(
            (v - exact).abs() <= 1e-12 * exact.max(1.0),
            "{v} vs {exact}"
        );
        if dim == 1 {
            let (v, _) = gw_distance_with(&mu, &nu, p, Engine::Line).unwrap();
            assert!(
                (v - exact).abs() <= 1e-12 * exact.max(1.0),
                "{v} vs {exact}"
            );
        }
    }
    let nine = random_measure(&mut rng, 1, 9, true);
    assert!(gw_distance_exact(&nine, &nine, NormParams::new(1.0, 1.0).unwrap()).is_err());
}

#[test]
fn line_and_bipartite_agree_on_larger_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let mu = random_measure(&mut rng, 1, 60, true);
        let nu = random_measure(&mut rng, 1, 45, true);
        let p = NormParams::new(rng.random_range(0.1..1.0), rng.random_range(0.5..4.0)).unwrap();
        let (line, _) = gw_distance_with(&mu, &nu, p, Engine::Line).unwrap();
        let (bip, _) = gw_distance_with(&mu, &nu, p, Engine::Bipartite).unwrap();
        assert!((line - bip).abs() <= 1e-9 * bip.max(1.0), "{line} vs {bip}");
    }
}

#[test]
fn primal_and_dual_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..100 {
        let dim = 1 + trial % 2;
        let mu = random_measure(&mut rng, dim, 10, false);
        let nu = random_measure(&mut rng, dim, 10, false);
        let p = NormParams::new(rng.random_range(0.2..3.0), rng.random_range(0.2..3.0)).unwrap();
        let primal = signed_distance(&mu, &nu, p).unwrap();
        let (dual, sol) = dual_value(&mu, &nu, p).unwrap();
        assert!(
            (primal - dual).abs() <= 1e-7 * primal.max(1.0),
            "{primal} vs {dual}"
        );
        for f in &sol.potentials {
            assert!(f.abs() <= p.a + 1e-12);
        }
    }
}

#[test]
fn dual_matches_two_point_closed_form() {
    let p = NormParams::new(1.0, 1.0).unwrap();
    for y in [0.1, 0.7, 1.99, 2.0, 3.5] {
        let (v, _) = dual_value(&measure_1d(&[(0.0, 1.0)]), &measure_1d(&[(y, 1.0)]), p).unwrap();
        assert!((v - f64::min(2.0, y)).abs() < 1e-12, "{y}: {v}");
    }
}

#[test]
fn generalized_distance_below_scaled_w1() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let mu = random_measure(&mut rng, 2, 6, true);
        let raw = random_measure(&mut rng, 2, 5, true);
        let nu = raw.scale(mu.mass() / raw.mass());
        let p = NormParams::new(rng.random_range(0.2..3.0), rng.random_range(0.2..3.0)).unwrap();
        let (w1, _) = w1_classic(&mu, &nu).unwrap();
        let (gw, _) = gw_distance(&mu, &nu, p).unwrap();
        assert!(gw <= p.b * w1 + 1e-9);
    }
}

#[test]
fn signed_distance_uses_positive_composites() {
    let mu = measure_1d(&[(0.0, 1.0), (1.0, -2.0)]);
    let nu = measure_1d(&[(0.0, -0.5), (2.0, 1.0)]);
    let (plus, minus) = signed_composites(&mu, &nu).unwrap();
    assert_eq!(plus, measure_1d(&[(0.0, 1.5)]));
    assert_eq!(minus, measure_1d(&[(1.0, 2.0), (2.0, 1.0)]));
    let p = NormParams::new(1.0, 1.0).unwrap();
    assert_eq!(
        signed_distance(&mu, &nu, p).unwrap(),
        gw_distance(&plus, &minus, p).unwrap().0
    );
    assert_eq!(
        signed_distance(&mu, &nu, p).unwrap(),
        signed_distance(&mu.sub(&nu).unwrap(), &SignedMeasure::empty(1), p).unwrap()
    );
}
