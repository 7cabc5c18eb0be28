//! Exact incomplete transport between discrete measures.
//!
//! Given probability measures `P` (atoms `x_i`, weights `p_i`) and `Q`
//! (atoms `y_j`, weights `q_j`) and a weight `w >= 1`, incomplete transport
//! minimizes `sum_ij c_ij pi_ij` over plans whose rows sum to `p_i` and
//! whose columns carry at most `w q_j`.
//!
//! The inequality is turned into a balanced problem by adding one dummy
//! source of mass `w - 1` that reaches every target at zero cost. The dummy
//! row absorbs the unused capacity and its potential fixes the gauge of the
//! dual so that every target potential is non-positive:
//!
//! ```text
//! max  sum_i p_i u_i + w sum_j q_j v_j
//! s.t. u_i + v_j <= c_ij,  v_j <= 0
//! ```
//!
//! With `w = 1` the dummy carries no mass and the problem is balanced
//! optimal transport; once `w q_j >= 1` for every column each source goes to
//! its nearest target and the cost equals the extremal cost.

mod network_simplex;
mod oracle;

pub use oracle::{brute_force_balanced, brute_force_it, MAX_ORACLE_VARS};

use network_simplex::solve_dense;

use crate::error::{Error, Result};
use crate::measures::{build_cost_matrix, CostKind, CostMatrix, DiscreteMeasure, Point};

const MAX_PIVOTS: usize = 200_000_000;
const FEASIBILITY_TOL: f64 = 1e-9;

/// A validated incomplete-transport problem.
#[derive(Debug, Clone)]
pub struct ItInstance {
    source: DiscreteMeasure,
    target: DiscreteMeasure,
    w: f64,
    cost: CostMatrix,
}

impl ItInstance {
    pub fn new(source: DiscreteMeasure, target: DiscreteMeasure, w: f64, cost: CostMatrix) -> Result<Self> {
        if !(w >= 1.0 && w.is_finite()) {
            return Err(Error::InvalidWeight(w));
        }
        source.require_probability()?;
        target.require_probability()?;
        if cost.rows() != source.len() || cost.cols() != target.len() {
            return Err(Error::ShapeMismatch(format!(
                "cost matrix is {}x{} but measures have {} and {} atoms",
                cost.rows(),
                cost.cols(),
                source.len(),
                target.len()
            )));
        }
        Ok(ItInstance { source, target, w, cost })
    }

    /// Builds the cost matrix from a ground cost.
    pub fn from_measures(source: DiscreteMeasure, target: DiscreteMeasure, w: f64, kind: CostKind) -> Result<Self> {
        let cost = build_cost_matrix(&kind, &source, &target)?;
        Self::new(source, target, w, cost)
    }

    /// Same data, different weight.
    pub fn with_weight(&self, w: f64) -> Result<Self> {
        Self::new(self.source.clone(), self.target.clone(), w, self.cost.clone())
    }

    pub fn source(&self) -> &DiscreteMeasure {
        &self.source
    }

    pub fn target(&self) -> &DiscreteMeasure {
        &self.target
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn cost(&self) -> &CostMatrix {
        &self.cost
    }

    /// Column capacities `w q_j`.
    pub fn capacities(&self) -> Vec<f64> {
        self.target.weights().iter().map(|q| self.w * q).collect()
    }
}

/// Sparse transport plan with marginal bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    /// `(source index, target index, mass)`, all masses positive, sorted.
    pub entries: Vec<(usize, usize, f64)>,
    pub row_marginals: Vec<f64>,
    pub col_marginals: Vec<f64>,
    /// Upper bound on each column (`w q_j`; `q_j` for balanced plans).
    pub col_capacity: Vec<f64>,
}

impl Coupling {
    pub fn from_entries(rows: usize, col_capacity: Vec<f64>, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        let cols = col_capacity.len();
        entries.sort_by_key(|e| (e.0, e.1));
        let mut row_marginals = vec![0.0; rows];
        let mut col_marginals = vec![0.0; cols];
        for &(i, j, mass) in &entries {
            if i >= rows || j >= cols {
                return Err(Error::Format(format!("coupling entry ({i}, {j}) out of range {rows}x{cols}")));
            }
            if !(mass > 0.0 && mass.is_finite()) {
                return Err(Error::Format(format!("coupling entry ({i}, {j}) has mass {mass}")));
            }
            row_marginals[i] += mass;
            col_marginals[j] += mass;
        }
        Ok(Coupling { entries, row_marginals, col_marginals, col_capacity })
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.2).sum()
    }

    pub fn cost(&self, cost: &CostMatrix) -> f64 {
        self.entries.iter().map(|&(i, j, m)| m * cost.get(i, j)).sum()
    }

    /// Columns whose load stays below capacity by more than `tol`.
    pub fn slack_columns(&self, tol: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.col_marginals.len()).filter(move |&j| self.col_marginals[j] < self.col_capacity[j] - tol)
    }
}

/// Dual potentials: `u` on sources (the c-transform values), `v <= 0` on
/// targets.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub objective: f64,
}

impl DualSolution {
    /// `sum_i p_i u_i + w sum_j q_j v_j`.
    pub fn objective_for(u: &[f64], v: &[f64], p: &[f64], q: &[f64], w: f64) -> f64 {
        let a: f64 = u.iter().zip(p).map(|(a, b)| a * b).sum();
        let b: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
        a + w * b
    }

    /// Largest violation of `u_i + v_j <= c_ij` and `v_j <= 0`.
    pub fn max_violation(&self, cost: &CostMatrix) -> f64 {
        let mut worst = self.v.iter().fold(0.0f64, |m, &v| m.max(v));
        for (i, ui) in self.u.iter().enumerate() {
            for (j, vj) in self.v.iter().enumerate() {
                worst = worst.max(ui + vj - cost.get(i, j));
            }
        }
        worst
    }
}

/// Optimal plan, its cost and a certifying dual.
#[derive(Debug, Clone)]
pub struct ItSolution {
    pub coupling: Coupling,
    pub primal_cost: f64,
    pub dual: DualSolution,
    pub pivots: usize,
}

/// Solve incomplete transport exactly.
pub fn solve_it(inst: &ItInstance) -> Result<ItSolution> {
    let (n, m) = (inst.source.len(), inst.target.len());
    let demand = inst.capacities();
    let dummy = (demand.iter().sum::<f64>() - inst.source.weights().iter().sum::<f64>()).max(0.0);
    let mut supply = inst.source.weights().to_vec();
    supply.push(dummy);
    let mut cost = Vec::with_capacity((n + 1) * m);
    cost.extend_from_slice(inst.cost.values());
    cost.resize((n + 1) * m, 0.0);

    let sol = solve_dense(&supply, &demand, &cost, MAX_PIVOTS, FEASIBILITY_TOL)?;

    let real: Vec<_> = sol.flows.iter().copied().filter(|&(i, _, _)| i < n).collect();
    let coupling = Coupling::from_entries(n, demand, real)?;
    let primal_cost = coupling.cost(&inst.cost);

    // Gauge: the dummy source gets u = 0, which forces v <= 0.
    let pi_dummy = sol.pi_source[n];
    let mut u: Vec<f64> = sol.pi_source[..n].iter().map(|pi| pi_dummy - pi).collect();
    let mut v: Vec<f64> = sol.pi_sink.iter().map(|pi| pi - pi_dummy).collect();
    let vmax = v.iter().fold(0.0f64, |a, &b| a.max(b));
    if vmax > 0.0 {
        v.iter_mut().for_each(|x| *x -= vmax);
        u.iter_mut().for_each(|x| *x += vmax);
    }
    let objective = DualSolution::objective_for(&u, &v, inst.source.weights(), inst.target.weights(), inst.w);
    Ok(ItSolution { coupling, primal_cost, dual: DualSolution { u, v, objective }, pivots: sol.pivots })
}

/// Balanced optimal transport between measures of equal total mass. The
/// returned dual is `u_i + v_j <= c_ij` without a sign constraint.
pub fn solve_balanced(source: &DiscreteMeasure, target: &DiscreteMeasure, cost: &CostMatrix) -> Result<ItSolution> {
    let (n, m) = (source.len(), target.len());
    if cost.rows() != n || cost.cols() != m {
        return Err(Error::ShapeMismatch("cost matrix does not match the measures".into()));
    }
    let scale = source.total_mass().max(target.total_mass());
    if (source.total_mass() - target.total_mass()).abs() > 1e-9 * scale {
        return Err(Error::InfeasibleInstance);
    }
    let sol = solve_dense(source.weights(), target.weights(), cost.values(), MAX_PIVOTS, FEASIBILITY_TOL * scale)?;
    let coupling = Coupling::from_entries(n, target.weights().to_vec(), sol.flows)?;
    let primal_cost = coupling.cost(cost);
    let u: Vec<f64> = sol.pi_source.iter().map(|pi| -pi).collect();
    let v = sol.pi_sink;
    let objective = DualSolution::objective_for(&u, &v, source.weights(), target.weights(), 1.0);
    Ok(ItSolution { coupling, primal_cost, dual: DualSolution { u, v, objective }, pivots: sol.pivots })
}

/// Incomplete-transport cost for each weight in an ascending grid.
pub fn cost_curve(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    kind: CostKind,
    ws: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if ws.windows(2).any(|p| p[0] > p[1]) {
        return Err(Error::BadParams("weight grid must be sorted ascending".into()));
    }
    let base = ItInstance::from_measures(source.clone(), target.clone(), 1.0, kind)?;
    ws.iter()
        .map(|&w| {
            let inst = base.with_weight(w)?;
            Ok((w, solve_it(&inst)?.primal_cost))
        })
        .collect()
}

/// Mass-weighted average target of every source row.
pub fn barycentric_projection(cpl: &Coupling, target: &DiscreteMeasure) -> Result<Vec<Point>> {
    let d = target.dim();
    let rows = cpl.row_marginals.len();
    let mut acc = vec![0.0; rows * d];
    for &(i, j, mass) in &cpl.entries {
        if j >= target.len() {
            return Err(Error::ShapeMismatch(format!("coupling column {j} outside target of {} atoms", target.len())));
        }
        for (a, y) in acc[i * d..(i + 1) * d].iter_mut().zip(target.point(j)) {
            *a += mass * y;
        }
    }
    (0..rows)
        .map(|i| {
            let mass = cpl.row_marginals[i];
            if mass <= 0.0 {
                return Err(Error::ZeroRowMass(i));
            }
            Point::new(acc[i * d..(i + 1) * d].iter().map(|a| a / mass).collect())
        })
        .collect()
}

/// `primal - dual objective`; non-negative up to rounding for a feasible dual.
pub fn duality_gap(primal_cost: f64, dual: &DualSolution) -> f64 {
    primal_cost - dual.objective
}

/// Among columns with unused capacity (by more than `tol`), the fraction
/// whose potential is within `tol` of zero. Returns 1.0 when no column has
/// slack.
pub fn vanishing_fraction(dual: &DualSolution, cpl: &Coupling, tol: f64) -> f64 {
    let (mut total, mut zero) = (0usize, 0usize);
    for j in cpl.slack_columns(tol) {
        total += 1;
        if dual.v[j].abs() <= tol {
            zero += 1;
        }
    }
    if total == 0 {
        1.0
    } else {
        zero as f64 / total as f64
    }
}

/// Checks `mu <= nu` coordinatewise.
pub fn is_dominated(mu: &[f64], nu: &[f64], tol: f64) -> bool {
    mu.iter().zip(nu).all(|(a, b)| *a <= b + tol)
}

#[cfg(test)]
mod tests;
