//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Independent of the network simplex: it knows nothing about trees or
//! potentials and solves the transport LP in its raw matrix form. Meant for
//! tiny instances only.

use crate::error::{Error, Result};

use super::ItInstance;

/// Largest `N * M` accepted by [`brute_force_it`].
pub const MAX_ORACLE_VARS: usize = 64;

const TOL: f64 = 1e-12;

/// Minimize `c^T x` subject to `A x = b`, `x >= 0`, with `b >= 0`.
///
/// Returns `None` if infeasible. The problem must be bounded.
fn simplex_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    let rows = a.len();
    let vars = c.len();
    let width = vars + rows + 1;
    let rhs = width - 1;
    let mut t: Vec<Vec<f64>> = (0..rows)
        .map(|r| {
            let mut row = vec![0.0; width];
            row[..vars].copy_from_slice(&a[r]);
            row[vars + r] = 1.0;
            row[rhs] = b[r];
            row
        })
        .collect();
    let mut basis: Vec<usize> = (vars..vars + rows).collect();

    // Phase 1: minimize the sum of artificials.
    let mut obj = vec![0.0; width];
    for row in &t {
        for k in 0..vars {
            obj[k] -= row[k];
        }
        obj[rhs] -= row[rhs];
    }
    run(&mut t, &mut obj, &mut basis, vars);
    if -obj[rhs] > 1e-10 {
        return None;
    }

    // Drive zero-level artificials out of the basis where possible.
    for r in 0..rows {
        if basis[r] >= vars {
            if let Some(k) = (0..vars).find(|&k| t[r][k].abs() > 1e-9) {
                pivot(&mut t, &mut obj, &mut basis, r, k);
            }
        }
    }

    // Phase 2 on the original objective, artificials barred from entering.
    let mut obj = vec![0.0; width];
    obj[..vars].copy_from_slice(c);
    for r in 0..rows {
        let bv = basis[r];
        let cb = if bv < vars { c[bv] } else { 0.0 };
        if cb != 0.0 {
            for k in 0..width {
                obj[k] -= cb * t[r][k];
            }
        }
    }
    run(&mut t, &mut obj, &mut basis, vars);
    Some(-obj[rhs])
}

fn run(t: &mut [Vec<f64>], obj: &mut [f64], basis: &mut [usize], vars: usize) {
    let rhs = obj.len() - 1;
    loop {
        // Bland: lowest-index improving column.
        let Some(col) = (0..vars).find(|&k| obj[k] < -TOL) else { return };
        let mut best: Option<(usize, f64)> = None;
        for r in 0..t.len() {
            if t[r][col] > TOL {
                let ratio = t[r][rhs] / t[r][col];
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => {
                        if ratio < bratio - TOL || (ratio <= bratio + TOL && basis[r] < basis[br]) {
                            Some((r, ratio))
                        } else {
                            Some((br, bratio))
                        }
                    }
                };
            }
        }
        let (row, _) = best.expect("transport LPs are bounded");
        pivot(t, obj, basis, row, col);
    }
}

fn pivot(t: &mut [Vec<f64>], obj: &mut [f64], basis: &mut [usize], row: usize, col: usize) {
    let p = t[row][col];
    for v in t[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[row].clone();
    for (r, other) in t.iter_mut().enumerate() {
        if r != row {
            let f = other[col];
            if f != 0.0 {
                for (x, y) in other.iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
            }
        }
    }
    let f = obj[col];
    if f != 0.0 {
        for (x, y) in obj.iter_mut().zip(&pivot_row) {
            *x -= f * y;
        }
    }
    basis[row] = col;
}

/// Transport LP over an `n x m` cost matrix: rows sum to `supply`, columns
/// sum to `cap` exactly (`balanced`) or at most `cap`.
pub(crate) fn dense_transport_lp(supply: &[f64], cap: &[f64], cost: &[f64], balanced: bool) -> Option<f64> {
    let (n, m) = (supply.len(), cap.len());
    let slacks = if balanced { 0 } else { m };
    let vars = n * m + slacks;
    let mut a = vec![vec![0.0; vars]; n + m];
    for i in 0..n {
        for j in 0..m {
            a[i][i * m + j] = 1.0;
            a[n + j][i * m + j] = 1.0;
        }
    }
    if !balanced {
        for j in 0..m {
            a[n + j][n * m + j] = 1.0;
        }
    }
    let mut c = cost.to_vec();
    c.resize(vars, 0.0);
    let b: Vec<f64> = supply.iter().chain(cap).copied().collect();
    simplex_min(&a, &b, &c)
}

/// Exact incomplete-transport cost by dense LP. Only for `N * M <= 64`.
pub fn brute_force_it(inst: &ItInstance) -> Result<f64> {
    let (n, m) = (inst.source().len(), inst.target().len());
    if n * m > MAX_ORACLE_VARS {
        return Err(Error::InstanceTooLarge { rows: n, cols: m });
    }
    let cap: Vec<f64> = inst.capacities();
    dense_transport_lp(inst.source().weights(), &cap, inst.cost().values(), false).ok_or(Error::InfeasibleInstance)
}

/// Balanced optimal transport cost by dense LP. Only for `N * M <= 64`.
pub fn brute_force_balanced(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<f64> {
    if supply.len() * demand.len() > MAX_ORACLE_VARS {
        return Err(Error::InstanceTooLarge { rows: supply.len(), cols: demand.len() });
    }
    dense_transport_lp(supply, demand, cost, true).ok_or(Error::InfeasibleInstance)
}
