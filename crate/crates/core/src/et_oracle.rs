//! Exact extremal transport against a finite target support.
//!
//! The cheapest place for a source point `x` to go is its nearest neighbor
//! in `Supp(Q)`; its cost `c*(x)` does not depend on the target weights.
//! Integrating `c*` against the source gives the extremal cost, the limit of
//! incomplete transport as the weight grows without bound.

use crate::error::{Error, Result};
use crate::measures::{CostKind, DiscreteMeasure, GroundCost, Point};

/// Default absolute tolerance for declaring two target atoms tied.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

/// Nearest-neighbor set of one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct NnResult {
    /// Target indices within `tie_tol` of the minimum, ascending.
    pub argmin_indices: Vec<usize>,
    pub c_star: f64,
}

fn check(x: &[f64], target: &DiscreteMeasure) -> Result<()> {
    if target.is_empty() {
        return Err(Error::EmptyInput("target support"));
    }
    if x.len() != target.dim() {
        return Err(Error::DimensionMismatch { expected: target.dim(), found: x.len() });
    }
    Ok(())
}

/// Lowest-index minimizer and the minimal cost, no validation.
#[inline]
fn nearest(x: &[f64], target: &DiscreteMeasure, kind: CostKind) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, y) in target.points().enumerate() {
        let c = kind.cost(x, y);
        if c < best.1 {
            best = (j, c);
        }
    }
    best
}

/// `c*(x) = min_j c(x, y_j)`.
pub fn c_star(x: &[f64], target: &DiscreteMeasure, kind: CostKind) -> Result<f64> {
    check(x, target)?;
    Ok(nearest(x, target, kind).1)
}

/// Full tie set of nearest neighbors of `x`.
pub fn nn_query(x: &[f64], target: &DiscreteMeasure, kind: CostKind, tie_tol: f64) -> Result<NnResult> {
    check(x, target)?;
    let costs: Vec<f64> = target.points().map(|y| kind.cost(x, y)).collect();
    let c_star = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let argmin_indices =
        costs.iter().enumerate().filter(|(_, &c)| (c - c_star).abs() <= tie_tol).map(|(j, _)| j).collect();
    Ok(NnResult { argmin_indices, c_star })
}

fn check_pair(source: &DiscreteMeasure, target: &DiscreteMeasure) -> Result<()> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::EmptyInput("extremal transport needs non-empty measures"));
    }
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: source.dim(), found: target.dim() });
    }
    Ok(())
}

/// Index of the chosen target atom for every source atom. Ties go to the
/// lowest target index.
pub fn et_assignment(source: &DiscreteMeasure, target: &DiscreteMeasure, kind: CostKind) -> Result<Vec<usize>> {
    check_pair(source, target)?;
    Ok(source.points().map(|x| nearest(x, target, kind).0).collect())
}

/// Deterministic extremal transport map evaluated at each source atom.
pub fn et_map(source: &DiscreteMeasure, target: &DiscreteMeasure, kind: CostKind) -> Result<Vec<Point>> {
    let idx = et_assignment(source, target, kind)?;
    Ok(idx.into_iter().map(|j| Point::new(target.point(j).to_vec()).expect("target atoms are finite")).collect())
}

/// `sum_i p_i c*(x_i)`. The source must be a probability measure.
pub fn extremal_cost(source: &DiscreteMeasure, target: &DiscreteMeasure, kind: CostKind) -> Result<f64> {
    check_pair(source, target)?;
    source.require_probability()?;
    Ok(source.points().zip(source.weights()).map(|(x, p)| p * nearest(x, target, kind).1).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::build_cost_matrix;
    use proptest::prelude::*;

    const SQ: CostKind = CostKind::SqEuclideanNormalized;

    fn m1(xs: &[f64]) -> DiscreteMeasure {
        let p: Vec<Point> = xs.iter().map(|&x| Point::from([x])).collect();
        DiscreteMeasure::uniform(&p, 1.0).unwrap()
    }

    #[test]
    fn c_star_examples() {
        assert_eq!(c_star(&[0.0], &m1(&[1.0, 3.0]), SQ).unwrap(), 1.0);
        assert_eq!(c_star(&[3.0], &m1(&[1.0, 3.0]), SQ).unwrap(), 0.0);
        let q = DiscreteMeasure::uniform(&[[3.0, 4.0].into()], 1.0).unwrap();
        assert_eq!(c_star(&[0.0, 0.0], &q, CostKind::L1Normalized).unwrap(), 3.5);
        assert!(matches!(c_star(&[0.0, 0.0], &m1(&[1.0]), SQ), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn nn_query_examples() {
        let r = nn_query(&[0.0], &m1(&[-1.0, 1.0]), SQ, 1e-12).unwrap();
        assert_eq!(r.argmin_indices, vec![0, 1]);
        assert_eq!(r.c_star, 1.0);
        let r = nn_query(&[0.0], &m1(&[1.0, 3.0]), SQ, DEFAULT_TIE_TOL).unwrap();
        assert_eq!(r.argmin_indices, vec![0]);
        assert_eq!(r.c_star, 1.0);
        let r = nn_query(&[3.0], &m1(&[1.0, 3.0, 3.0]), SQ, DEFAULT_TIE_TOL).unwrap();
        assert!(r.argmin_indices.contains(&1));
        assert_eq!(r.c_star, 0.0);
    }

    #[test]
    fn et_map_examples() {
        let q = m1(&[0.0, 1.0, 2.0]);
        let p = m1(&[2.0, 0.0]);
        let t = et_map(&p, &q, SQ).unwrap();
        assert_eq!(t[0].coords(), &[2.0]);
        assert_eq!(t[1].coords(), &[0.0]);
        assert_eq!(et_map(&m1(&[0.4]), &m1(&[0.0, 1.0]), SQ).unwrap()[0].coords(), &[0.0]);
        assert_eq!(et_map(&m1(&[0.5]), &m1(&[0.0, 1.0]), SQ).unwrap()[0].coords(), &[0.0]);
    }

    #[test]
    fn extremal_cost_examples() {
        let p = m1(&[0.3, 1.7, -2.0]);
        assert_eq!(extremal_cost(&p, &p, SQ).unwrap(), 0.0);
        assert_eq!(extremal_cost(&m1(&[0.0, 2.0]), &m1(&[1.0]), SQ).unwrap(), 1.0);
        assert_eq!(extremal_cost(&m1(&[0.0, 1.0]), &m1(&[0.0, 10.0]), SQ).unwrap(), 0.5);
        let heavy = DiscreteMeasure::uniform(&[Point::from([0.0])], 2.0).unwrap();
        assert!(matches!(extremal_cost(&heavy, &m1(&[1.0]), SQ), Err(Error::NonProbabilityMass(_))));
    }

    fn instance(max: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        (1..=3usize).prop_flat_map(move |d| {
            (
                prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), 1..=max),
                prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), 1..=max),
            )
        })
    }

    fn measure(pts: Vec<Vec<f64>>) -> DiscreteMeasure {
        let p: Vec<Point> = pts.into_iter().map(|c| Point::new(c).unwrap()).collect();
        DiscreteMeasure::uniform(&p, 1.0).unwrap()
    }

    /// Minimum over all `M^N` maps from source atoms into target atoms.
    fn exhaustive_map_cost(p: &DiscreteMeasure, q: &DiscreteMeasure, kind: CostKind) -> f64 {
        let c = build_cost_matrix(&kind, p, q).unwrap();
        let (n, m) = (p.len(), q.len());
        let mut assign = vec![0usize; n];
        let mut best = f64::INFINITY;
        loop {
            let v: f64 = (0..n).map(|i| p.weights()[i] * c.get(i, assign[i])).sum();
            best = best.min(v);
            let mut k = 0;
            while k < n {
                assign[k] += 1;
                if assign[k] < m {
                    break;
                }
                assign[k] = 0;
                k += 1;
            }
            if k == n {
                return best;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn et_map_matches_exhaustive_search((a, b) in instance(8)) {
            let (p, q) = (measure(a), measure(b));
            for kind in [SQ, CostKind::L1Normalized] {
                let brute = exhaustive_map_cost(&p, &q, kind);
                let idx = et_assignment(&p, &q, kind).unwrap();
                let mapped: f64 = idx.iter().enumerate()
                    .map(|(i, &j)| p.weights()[i] * kind.cost(p.point(i), q.point(j))).sum();
                prop_assert!((mapped - brute).abs() <= 1e-12);
                prop_assert!((extremal_cost(&p, &q, kind).unwrap() - brute).abs() <= 1e-12);
            }
        }

        #[test]
        fn extremal_cost_lower_bounds_any_map(
            (a, b) in instance(8),
            seed in prop::collection::vec(0usize..64, 8),
        ) {
            let (p, q) = (measure(a), measure(b));
            let any: f64 = (0..p.len())
                .map(|i| p.weights()[i] * SQ.cost(p.point(i), q.point(seed[i] % q.len())))
                .sum();
            prop_assert!(extremal_cost(&p, &q, SQ).unwrap() <= any + 1e-15);
        }

        #[test]
        fn extremal_cost_ignores_target_weights(
            (a, b) in instance(8),
            raw in prop::collection::vec(0.01f64..5.0, 8),
        ) {
            let (p, q) = (measure(a), measure(b));
            let q2 = DiscreteMeasure::weighted(&q.to_points(), raw[..q.len()].to_vec()).unwrap();
            prop_assert_eq!(extremal_cost(&p, &q, SQ).unwrap(), extremal_cost(&p, &q2, SQ).unwrap());
        }

        #[test]
        fn c_star_is_lipschitz_on_the_box(
            (_, b) in instance(8),
            x in prop::collection::vec(-1.0f64..1.0, 3),
            xp in prop::collection::vec(-1.0f64..1.0, 3),
        ) {
            let q = measure(b);
            let d = q.dim();
            let (x, xp) = (&x[..d], &xp[..d]);
            // Every coordinate lives in [-1, 1].
            let diameter = 2.0 * (d as f64).sqrt();
            let dist = x.iter().zip(xp).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            for kind in [SQ, CostKind::L1Normalized] {
                let lip = kind.lipschitz_on(diameter, d);
                let gap = (c_star(x, &q, kind).unwrap() - c_star(xp, &q, kind).unwrap()).abs();
                prop_assert!(gap <= lip * dist + 1e-12);
            }
        }
    }
}
