//! Primal network simplex for transportation problems.
//!
//! Spanning-tree representation with parent/thread/successor bookkeeping,
//! block-search pricing and strongly feasible trees for anti-cycling, in the
//! style of LEMON's `NetworkSimplex`. All real arcs are uncapacitated, so a
//! non-tree arc always sits at its lower bound.
//!
//! The dense driver [`solve_dense`] does not hand all `n*m` arcs to the
//! simplex at once. It starts from the cheapest few columns of each row,
//! optimizes, then prices the full matrix with the current potentials and
//! adds violating arcs until none is left. The result is optimal for the
//! dense problem; only pricing sees every arc.

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;
const UP: i8 = 1;
const DOWN: i8 = -1;
const TREE: u8 = 0;
const LOWER: u8 = 1;

/// Columns per row in the initial candidate set.
const INITIAL_CANDIDATES: usize = 12;
/// Violating arcs added per row and pricing round.
const ADDED_PER_ROUND: usize = 8;

/// Raw solver output: arc flows on real arcs and node potentials.
#[derive(Debug, Clone)]
pub(crate) struct TransportSolution {
    /// `(i, j, flow)` for every tree arc with positive flow, row-major.
    pub flows: Vec<(usize, usize, f64)>,
    /// Potentials of source nodes; reduced cost is `c_ij + pi_i - pi_j`.
    pub pi_source: Vec<f64>,
    pub pi_sink: Vec<f64>,
    pub pivots: usize,
}

/// Network simplex over a growable arc list. Arc `u < node_num` is the
/// artificial arc joining node `u` with the root; real arcs follow.
pub(crate) struct NetworkSimplex {
    node_num: usize,
    root: usize,
    eps: f64,

    source: Vec<u32>,
    target: Vec<u32>,
    cost: Vec<f64>,
    flow: Vec<f64>,
    state: Vec<u8>,

    parent: Vec<usize>,
    pred: Vec<usize>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    pred_dir: Vec<i8>,
    pi: Vec<f64>,
    dirty_revs: Vec<usize>,

    block_size: usize,
    next_arc: usize,
    pivots: usize,

    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: f64,
}

impl NetworkSimplex {
    /// `supply[u] > 0` for sources, `< 0` for sinks; totals must balance up
    /// to rounding. `max_cost` bounds every arc cost that will ever be added.
    pub fn new(supply: &[f64], max_cost: f64) -> Self {
        let node_num = supply.len();
        let root = node_num;
        let max_cost = max_cost.abs();
        let art_cost = (max_cost + 1.0) * node_num as f64;
        let mut s = NetworkSimplex {
            node_num,
            root,
            // Reduced costs below -eps are priced as improving.
            eps: 1e-12 * max_cost.max(1.0),
            source: vec![0; node_num],
            target: vec![0; node_num],
            cost: vec![0.0; node_num],
            flow: vec![0.0; node_num],
            state: vec![TREE; node_num],
            parent: vec![NONE; node_num + 1],
            pred: vec![NONE; node_num + 1],
            thread: vec![0; node_num + 1],
            rev_thread: vec![0; node_num + 1],
            succ_num: vec![1; node_num + 1],
            last_succ: vec![0; node_num + 1],
            pred_dir: vec![UP; node_num + 1],
            pi: vec![0.0; node_num + 1],
            dirty_revs: Vec::new(),
            block_size: 10,
            next_arc: node_num,
            pivots: 0,
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0.0,
        };
        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = node_num + 1;
        s.last_succ[root] = root.wrapping_sub(1);
        for (u, &sup) in supply.iter().enumerate() {
            s.parent[u] = root;
            s.pred[u] = u;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.last_succ[u] = u;
            if sup >= 0.0 {
                s.pred_dir[u] = UP;
                s.source[u] = u as u32;
                s.target[u] = root as u32;
                s.flow[u] = sup;
            } else {
                s.pred_dir[u] = DOWN;
                s.pi[u] = art_cost;
                s.source[u] = root as u32;
                s.target[u] = u as u32;
                s.cost[u] = art_cost;
                s.flow[u] = -sup;
            }
        }
        s
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cost: f64) {
        self.source.push(from as u32);
        self.target.push(to as u32);
        self.cost.push(cost);
        self.flow.push(0.0);
        self.state.push(LOWER);
    }

    pub fn potential(&self, u: usize) -> f64 {
        self.pi[u]
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    #[inline]
    fn source(&self, e: usize) -> usize {
        self.source[e] as usize
    }

    #[inline]
    fn target(&self, e: usize) -> usize {
        self.target[e] as usize
    }

    #[inline]
    fn arc_cost(&self, e: usize) -> f64 {
        self.cost[e]
    }

    /// Block search over real arcs, resuming where the last search stopped.
    fn find_entering_arc(&mut self) -> bool {
        let first = self.node_num;
        let total = self.cost.len();
        if total == first {
            return false;
        }
        let mut min = 0.0;
        let mut best = NONE;
        let mut cnt = self.block_size;
        let mut e = if self.next_arc < total { self.next_arc } else { first };
        for _ in first..total {
            if self.state[e] == LOWER {
                let c = self.cost[e] + self.pi[self.source[e] as usize] - self.pi[self.target[e] as usize];
                if c < min {
                    min = c;
                    best = e;
                }
            }
            e += 1;
            if e == total {
                e = first;
            }
            cnt -= 1;
            if cnt == 0 {
                if min < -self.eps {
                    break;
                }
                cnt = self.block_size;
            }
        }
        if min < -self.eps {
            self.in_arc = best;
            self.next_arc = e;
            true
        } else {
            false
        }
    }

    fn find_join_node(&mut self) {
        let mut u = self.source(self.in_arc);
        let mut v = self.target(self.in_arc);
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    /// Returns false if the cycle has no blocking arc (unbounded).
    fn find_leaving_arc(&mut self) -> bool {
        let first = self.source(self.in_arc);
        let second = self.target(self.in_arc);
        let mut delta = f64::INFINITY;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            if self.pred_dir[u] == UP {
                let d = self.flow[self.pred[u]];
                if d < delta {
                    delta = d;
                    self.u_out = u;
                    result = 1;
                }
            }
            u = self.parent[u];
        }
        u = second;
        while u != self.join {
            if self.pred_dir[u] == DOWN {
                let d = self.flow[self.pred[u]];
                if d <= delta {
                    delta = d;
                    self.u_out = u;
                    result = 2;
                }
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        self.delta = delta;
        result != 0
    }

    fn change_flow(&mut self) {
        let val = self.delta;
        if val > 0.0 {
            self.flow[self.in_arc] += val;
            let mut u = self.source(self.in_arc);
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] -= f64::from(self.pred_dir[u]) * val;
                u = self.parent[u];
            }
            u = self.target(self.in_arc);
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] += f64::from(self.pred_dir[u]) * val;
                u = self.parent[u];
            }
        }
        let out = self.pred[self.u_out];
        self.flow[out] = 0.0;
        self.state[self.in_arc] = TREE;
        self.state[out] = LOWER;
    }

    fn update_tree_structure(&mut self) {
        let (u_in, v_in, u_out, join) = (self.u_in, self.v_in, self.u_out, self.join);
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];
        let in_dir = if u_in == self.source(self.in_arc) { UP } else { DOWN };

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = in_dir;

            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            // If old_rev_thread == v_in then join == v_out.
            let thread_continue = if old_rev_thread == v_in { self.thread[old_last_succ] } else { self.thread[v_in] };

            // Re-hang the stem from u_in up to u_out under v_in.
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);

                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;

                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;

                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;

            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }

            for k in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[k];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }

            // Walk the stem again, reversing pred arcs and fixing counts.
            let mut tmp_sc = 0isize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u];
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                tmp_sc += self.succ_num[u] as isize - self.succ_num[p] as isize;
                self.succ_num[u] = tmp_sc as usize;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = in_dir;
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in { join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }

        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && u != NONE && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && u != NONE && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }

        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let c = self.arc_cost(self.in_arc);
        let sigma = self.pi[self.v_in] - self.pi[self.u_in] - f64::from(self.pred_dir[self.u_in]) * c;
        let end = self.thread[self.last_succ[self.u_in]];
        let mut u = self.u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    /// Recompute every potential from the tree, parents before children.
    fn recompute_potentials(&mut self) {
        self.pi[self.root] = 0.0;
        let mut u = self.thread[self.root];
        while u != self.root {
            let e = self.pred[u];
            let p = self.parent[u];
            let c = self.arc_cost(e);
            self.pi[u] = if self.pred_dir[u] == UP { self.pi[p] - c } else { self.pi[p] + c };
            u = self.thread[u];
        }
    }

    /// Pivot until no arc in the current set prices out.
    pub fn optimize(&mut self, max_pivots: usize) -> Result<()> {
        let real = self.cost.len() - self.node_num;
        self.block_size = ((real as f64).sqrt().ceil() as usize).max(10);
        while self.find_entering_arc() {
            if self.pivots >= max_pivots {
                return Err(Error::SolverNonConvergence { pivots: self.pivots });
            }
            self.pivots += 1;
            self.find_join_node();
            if !self.find_leaving_arc() {
                // Cannot happen: artificial arcs bound every cycle.
                return Err(Error::InfeasibleInstance);
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
        }
        self.recompute_potentials();
        Ok(())
    }

    /// Largest flow still routed through an artificial arc.
    pub fn artificial_flow(&self) -> f64 {
        self.flow[..self.node_num].iter().fold(0.0f64, |a, f| a.max(f.abs()))
    }
}

/// Exact transport on a dense `n x m` row-major cost matrix with supplies
/// `supply` and demands `demand` (equal totals).
pub(crate) fn solve_dense(
    supply: &[f64],
    demand: &[f64],
    cost: &[f64],
    max_pivots: usize,
    feas_tol: f64,
) -> Result<TransportSolution> {
    let (n, m) = (supply.len(), demand.len());
    assert_eq!(cost.len(), n * m);
    let max_cost = cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let node_supply: Vec<f64> = supply.iter().copied().chain(demand.iter().map(|d| -d)).collect();
    let mut ns = NetworkSimplex::new(&node_supply, max_cost);

    let mut order: Vec<usize> = Vec::with_capacity(m);
    for i in 0..n {
        let row = &cost[i * m..(i + 1) * m];
        order.clear();
        order.extend(0..m);
        let k = INITIAL_CANDIDATES.min(m);
        if k < m {
            order.select_nth_unstable_by(k - 1, |&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        }
        order[..k].sort_unstable();
        for &j in &order[..k] {
            ns.add_arc(i, n + j, row[j]);
        }
    }

    let mut violating: Vec<(f64, usize)> = Vec::new();
    loop {
        ns.optimize(max_pivots)?;
        let eps = ns.eps();
        let mut added = 0;
        for i in 0..n {
            let row = &cost[i * m..(i + 1) * m];
            let pi_i = ns.potential(i);
            violating.clear();
            for (j, c) in row.iter().enumerate() {
                let rc = c + pi_i - ns.potential(n + j);
                if rc < -eps {
                    violating.push((rc, j));
                }
            }
            let k = ADDED_PER_ROUND.min(violating.len());
            if k == 0 {
                continue;
            }
            if k < violating.len() {
                violating.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            }
            violating[..k].sort_unstable_by_key(|v| v.1);
            for &(_, j) in &violating[..k] {
                ns.add_arc(i, n + j, row[j]);
            }
            added += k;
        }
        if added == 0 {
            break;
        }
    }
    if ns.artificial_flow() > feas_tol {
        return Err(Error::InfeasibleInstance);
    }

    let mut flows: Vec<(usize, usize, f64)> = (n + m..ns.cost.len())
        .filter(|&e| ns.state[e] == TREE && ns.flow[e] > 0.0)
        .map(|e| (ns.source(e), ns.target(e) - n, ns.flow[e]))
        .collect();
    flows.sort_by_key(|e| (e.0, e.1));
    Ok(TransportSolution {
        flows,
        pi_source: ns.pi[..n].to_vec(),
        pi_sink: ns.pi[n..n + m].to_vec(),
        pivots: ns.pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(a: &[f64], b: &[f64], c: &[f64]) -> TransportSolution {
        solve_dense(a, b, c, 1_000_000, 1e-12).unwrap()
    }

    fn total(sol: &TransportSolution, c: &[f64], m: usize) -> f64 {
        sol.flows.iter().map(|&(i, j, f)| f * c[i * m + j]).sum()
    }

    #[test]
    fn two_by_two_assignment() {
        let c = [0.0, 100.0, 1.0, 81.0];
        let sol = solve(&[0.5, 0.5], &[0.5, 0.5], &c);
        assert!((total(&sol, &c, 2) - 40.5).abs() < 1e-12);
    }

    #[test]
    fn potentials_certify_optimality() {
        // 3x4 with uneven masses.
        let a = [0.2, 0.5, 0.3];
        let b = [0.1, 0.4, 0.25, 0.25];
        let c = [4.0, 1.0, 3.0, 2.0, 0.5, 2.0, 6.0, 1.0, 3.0, 3.0, 0.0, 5.0];
        let sol = solve(&a, &b, &c);
        for i in 0..3 {
            for j in 0..4 {
                let rc = c[i * 4 + j] + sol.pi_source[i] - sol.pi_sink[j];
                assert!(rc >= -1e-12, "rc({i},{j}) = {rc}");
            }
        }
        for &(i, j, _) in &sol.flows {
            let rc = c[i * 4 + j] + sol.pi_source[i] - sol.pi_sink[j];
            assert!(rc.abs() < 1e-12);
        }
        let dual: f64 =
            (0..3).map(|i| -a[i] * sol.pi_source[i]).sum::<f64>() + (0..4).map(|j| b[j] * sol.pi_sink[j]).sum::<f64>();
        assert!((dual - total(&sol, &c, 4)).abs() < 1e-12);
    }

    #[test]
    fn heavily_degenerate_integer_instance() {
        // Permutation-like problem with many equal costs.
        let n = 30;
        let c: Vec<f64> = (0..n * n).map(|e| ((e / n + 2 * (e % n)) % 5) as f64).collect();
        let a = vec![1.0; n];
        let sol = solve(&a, &a, &c);
        let mut row = vec![0.0; n];
        let mut col = vec![0.0; n];
        for &(i, j, f) in &sol.flows {
            row[i] += f;
            col[j] += f;
        }
        for k in 0..n {
            assert!((row[k] - 1.0).abs() < 1e-12 && (col[k] - 1.0).abs() < 1e-12);
        }
        // Every row has a zero-cost column, each column is zero for some row.
        assert!(total(&sol, &c, n).abs() < 1e-12);
    }
}
