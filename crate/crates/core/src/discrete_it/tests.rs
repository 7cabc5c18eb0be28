use super::*;
use crate::et_oracle::extremal_cost;
use crate::measures::GroundCost;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SQ: CostKind = CostKind::SqEuclideanNormalized;

fn m1(xs: &[f64]) -> DiscreteMeasure {
    let p: Vec<Point> = xs.iter().map(|&x| Point::from([x])).collect();
    DiscreteMeasure::uniform(&p, 1.0).unwrap()
}

fn two_by_two(w: f64) -> ItInstance {
    ItInstance::from_measures(m1(&[0.0, 1.0]), m1(&[0.0, 10.0]), w, SQ).unwrap()
}

fn random_measure(rng: &mut ChaCha8Rng, n: usize, d: usize, uniform: bool) -> DiscreteMeasure {
    let pts: Vec<Point> =
        (0..n).map(|_| Point::new((0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()).collect();
    if uniform {
        DiscreteMeasure::uniform(&pts, 1.0).unwrap()
    } else {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        DiscreteMeasure::weighted(&pts, raw).unwrap().normalized()
    }
}

fn check_solution(inst: &ItInstance, sol: &ItSolution) {
    let c = &sol.coupling;
    for (i, p) in inst.source().weights().iter().enumerate() {
        assert!((c.row_marginals[i] - p).abs() <= 1e-9, "row {i}");
    }
    for (j, cap) in inst.capacities().iter().enumerate() {
        assert!(c.col_marginals[j] <= cap + 1e-9, "column {j}");
    }
    assert!((c.total_mass() - 1.0).abs() <= 1e-9);
    assert!(c.entries.iter().all(|e| e.2 > 0.0));
    assert!(sol.dual.max_violation(inst.cost()) <= 1e-9);
    assert!(sol.dual.v.iter().all(|&v| v <= 0.0));
    let gap = duality_gap(sol.primal_cost, &sol.dual);
    assert!(gap.abs() <= 1e-7, "gap {gap}");
}

#[test]
fn single_atom_w1() {
    let p = m1(&[3.0]);
    let inst = ItInstance::from_measures(p.clone(), p, 1.0, SQ).unwrap();
    let sol = solve_it(&inst).unwrap();
    assert_eq!(sol.primal_cost, 0.0);
    assert_eq!(sol.coupling.entries, vec![(0, 0, 1.0)]);
}

#[test]
fn two_by_two_examples() {
    let sol = solve_it(&two_by_two(2.0)).unwrap();
    assert!((sol.primal_cost - 0.5).abs() < 1e-12);
    check_solution(&two_by_two(2.0), &sol);
    // Target 10 receives nothing and has slack, so its potential vanishes.
    assert_eq!(sol.coupling.col_marginals[1], 0.0);
    assert!(sol.dual.v[1].abs() <= 1e-12);
    assert_eq!(vanishing_fraction(&sol.dual, &sol.coupling, 1e-9), 1.0);
    let proj = barycentric_projection(&sol.coupling, two_by_two(2.0).target()).unwrap();
    assert_eq!(proj, vec![Point::from([0.0]), Point::from([0.0])]);

    let sol = solve_it(&two_by_two(1.0)).unwrap();
    assert!((sol.primal_cost - 40.5).abs() < 1e-12);
    check_solution(&two_by_two(1.0), &sol);
}

#[test]
fn oracle_examples() {
    assert!((brute_force_it(&two_by_two(2.0)).unwrap() - 0.5).abs() < 1e-12);
    assert!((brute_force_it(&two_by_two(1.0)).unwrap() - 40.5).abs() < 1e-12);
    let big = ItInstance::from_measures(m1(&[0.0; 9]), m1(&[1.0; 8]), 1.0, SQ).unwrap();
    assert!(matches!(brute_force_it(&big), Err(Error::InstanceTooLarge { .. })));
}

#[test]
fn oracle_with_w1_matches_balanced_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let p = random_measure(&mut rng, 4, 2, false);
        let q = random_measure(&mut rng, 5, 2, false);
        let inst = ItInstance::from_measures(p.clone(), q.clone(), 1.0, SQ).unwrap();
        let it = brute_force_it(&inst).unwrap();
        let ot = brute_force_balanced(p.weights(), q.weights(), inst.cost().values()).unwrap();
        assert!((it - ot).abs() < 1e-9);
    }
}

#[test]
fn rejects_bad_instances() {
    assert!(matches!(ItInstance::from_measures(m1(&[0.0]), m1(&[1.0]), 0.5, SQ), Err(Error::InvalidWeight(_))));
    let heavy = DiscreteMeasure::uniform(&[Point::from([0.0])], 2.0).unwrap();
    assert!(matches!(ItInstance::from_measures(heavy, m1(&[1.0]), 1.0, SQ), Err(Error::NonProbabilityMass(_))));
    assert!(cost_curve(&m1(&[0.0]), &m1(&[1.0]), SQ, &[2.0, 1.0]).is_err());
}

#[test]
fn barycentric_examples() {
    let q = DiscreteMeasure::uniform(&[[0.0, 0.0].into(), [2.0, 0.0].into()], 1.0).unwrap();
    let split = Coupling::from_entries(1, vec![0.5, 0.5], vec![(0, 0, 0.5), (0, 1, 0.5)]).unwrap();
    assert_eq!(barycentric_projection(&split, &q).unwrap(), vec![Point::from([1.0, 0.0])]);
    let det = Coupling::from_entries(2, vec![0.5, 0.5], vec![(0, 1, 0.5), (1, 0, 0.5)]).unwrap();
    assert_eq!(barycentric_projection(&det, &q).unwrap(), vec![Point::from([2.0, 0.0]), Point::from([0.0, 0.0])]);
    let empty_row = Coupling::from_entries(2, vec![1.0, 1.0], vec![(0, 0, 1.0)]).unwrap();
    assert!(matches!(barycentric_projection(&empty_row, &q), Err(Error::ZeroRowMass(1))));
}

#[test]
fn any_feasible_dual_lower_bounds_primal() {
    let inst = two_by_two(1.3);
    let sol = solve_it(&inst).unwrap();
    let u: Vec<f64> = (0..2).map(|i| inst.cost().row(i).iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let v = vec![0.0; 2];
    let obj = DualSolution::objective_for(&u, &v, inst.source().weights(), inst.target().weights(), inst.w());
    let dual = DualSolution { u, v, objective: obj };
    let gap = duality_gap(sol.primal_cost, &dual);
    assert!(gap >= 0.0);
    assert!((gap - (sol.primal_cost - obj)).abs() < 1e-15);
}

#[test]
fn vanishing_fraction_is_vacuous_without_slack() {
    let inst = two_by_two(1.0);
    let sol = solve_it(&inst).unwrap();
    assert_eq!(sol.coupling.slack_columns(1e-9).count(), 0);
    assert_eq!(vanishing_fraction(&sol.dual, &sol.coupling, 1e-9), 1.0);
}

#[test]
fn cost_curve_saturates_at_extremal_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let p = random_measure(&mut rng, 7, 2, false);
        let q = random_measure(&mut rng, 5, 2, true);
        let m = q.len() as f64;
        let curve = cost_curve(&p, &q, SQ, &[m, 2.0 * m]).unwrap();
        let et = extremal_cost(&p, &q, SQ).unwrap();
        for (_, c) in curve {
            assert!((c - et).abs() <= 1e-9);
        }
    }
    let p = m1(&[0.2, -1.0]);
    assert_eq!(cost_curve(&p, &p, SQ, &[1.0]).unwrap(), vec![(1.0, 0.0)]);
}

#[test]
fn w1_matches_balanced_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let p = random_measure(&mut rng, 20, 3, false);
        let q = random_measure(&mut rng, 30, 3, false);
        let inst = ItInstance::from_measures(p.clone(), q.clone(), 1.0, SQ).unwrap();
        let a = solve_it(&inst).unwrap().primal_cost;
        let b = solve_balanced(&p, &q, inst.cost()).unwrap();
        assert!((a - b.primal_cost).abs() <= 1e-9);
        assert!(duality_gap(b.primal_cost, &b.dual).abs() <= 1e-9);
    }
}

#[test]
fn larger_instance_is_certified() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_measure(&mut rng, 300, 2, true);
    let q = random_measure(&mut rng, 250, 2, true);
    for w in [1.0, 1.7, 4.0] {
        let inst = ItInstance::from_measures(p.clone(), q.clone(), w, SQ).unwrap();
        let sol = solve_it(&inst).unwrap();
        check_solution(&inst, &sol);
        for j in sol.coupling.slack_columns(1e-9) {
            assert!(sol.dual.v[j].abs() <= 1e-9);
        }
    }
}

fn small_instance() -> impl Strategy<Value = (u64, usize, usize, usize, usize)> {
    (any::<u64>(), 1..=6usize, 1..=6usize, 1..=3usize, 0..4usize)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_dense_lp_oracle((seed, n, m, d, wi) in small_instance()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (up, uq) = (rng.random_bool(0.5), rng.random_bool(0.5));
        let p = random_measure(&mut rng, n, d, up);
        let q = random_measure(&mut rng, m, d, uq);
        let w = [1.0, 1.3, 2.0, m as f64][wi];
        let inst = ItInstance::from_measures(p, q, w, SQ).unwrap();
        let sol = solve_it(&inst).unwrap();
        let oracle = brute_force_it(&inst).unwrap();
        prop_assert!((sol.primal_cost - oracle).abs() <= 1e-7, "{} vs {}", sol.primal_cost, oracle);
        check_solution(&inst, &sol);
    }

    #[test]
    fn degenerate_integer_costs_match_oracle(seed in any::<u64>(), n in 1..=6usize, m in 1..=6usize, w in 1..=4u32) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = m1(&(0..n).map(|_| rng.random_range(0..3) as f64).collect::<Vec<_>>());
        let q = m1(&(0..m).map(|_| rng.random_range(0..3) as f64).collect::<Vec<_>>());
        let inst = ItInstance::from_measures(p, q, w as f64, CostKind::L1Normalized).unwrap();
        let sol = solve_it(&inst).unwrap();
        prop_assert!((sol.primal_cost - brute_force_it(&inst).unwrap()).abs() <= 1e-9);
        check_solution(&inst, &sol);
    }

    #[test]
    fn cost_is_monotone_and_convex_in_w(seed in any::<u64>(), n in 2..=12usize, m in 2..=12usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_measure(&mut rng, n, 2, false);
        let q = random_measure(&mut rng, m, 2, false);
        let ws = [1.0, 1.25, 1.5, 1.75, 2.0, 3.0, 4.0];
        let curve = cost_curve(&p, &q, SQ, &ws).unwrap();
        for &(w, c) in &curve {
            let inst = ItInstance::from_measures(p.clone(), q.clone(), w, SQ).unwrap();
            if n * m <= 64 {
                prop_assert!((brute_force_it(&inst).unwrap() - c).abs() < 1e-9, "w={} {:?}", w, curve);
            }
        }
        for pair in curve.windows(2) {
            prop_assert!(pair[1].1 <= pair[0].1 + 1e-9);
        }
        for (a, b, c) in [(0, 1, 2), (0, 2, 4), (4, 5, 6), (1, 2, 3), (0, 4, 5)] {
            let mid = curve[b].1;
            prop_assert!(mid <= 0.5 * (curve[a].1 + curve[c].1) + 1e-7);
        }
    }

    #[test]
    fn slack_columns_have_vanishing_potential((seed, n, m, d, _wi) in small_instance(), w in 1.0f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_measure(&mut rng, n, d, false);
        let q = random_measure(&mut rng, m, d, false);
        let inst = ItInstance::from_measures(p, q, w, SQ).unwrap();
        let sol = solve_it(&inst).unwrap();
        for j in sol.coupling.slack_columns(1e-9) {
            prop_assert!(sol.dual.v[j].abs() <= 1e-9);
        }
    }

    #[test]
    fn domination_is_detected_by_nonpositive_tests(seed in any::<u64>(), m in 1..=8usize, violate in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nu: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
        let mut mu: Vec<f64> = nu.iter().map(|x| x * rng.random_range(0.0..1.0)).collect();
        if violate {
            let j = rng.random_range(0..m);
            mu[j] = nu[j] + rng.random_range(1e-3..0.5);
        }
        // Non-positive test functions: the extreme rays -e_j and random mixtures.
        let mut tests: Vec<Vec<f64>> = (0..m)
            .map(|j| (0..m).map(|k| if k == j { -1.0 } else { 0.0 }).collect())
            .collect();
        tests.extend((0..100).map(|_| (0..m).map(|_| -rng.random_range(0.0..1.0)).collect()));
        let passes = tests.iter().all(|f| {
            f.iter().zip(mu.iter().zip(&nu)).map(|(f, (u, n))| f * (u - n)).sum::<f64>() >= -1e-9
        });
        prop_assert_eq!(passes, !violate);
        prop_assert_eq!(is_dominated(&mu, &nu, 1e-12), !violate);
    }
}

#[test]
fn extremal_cost_is_reached_by_nearest_neighbor_plan_cost() {
    // Independent check of the saturation value on a hand instance.
    let p = m1(&[0.0, 1.0]);
    let q = m1(&[0.0, 10.0]);
    let c = SQ.cost(&[1.0], &[0.0]) * 0.5;
    assert_eq!(extremal_cost(&p, &q, SQ).unwrap(), c);
    let sol = solve_it(&ItInstance::from_measures(p, q, 2.0, SQ).unwrap()).unwrap();
    assert!((sol.primal_cost - c).abs() < 1e-12);
}
