//! Transportation problem solved as a min-cost flow by successive shortest
//! paths with node potentials.
//!
//! Nodes are the source `S`, one node per supply atom, one per demand atom and
//! the sink `T`. Each phase runs a dense Dijkstra on reduced costs, pushes the
//! bottleneck along the shortest `S → T` path and shifts the potentials by the
//! distances, which keeps every residual reduced cost nonnegative.

/// Masses below this are treated as exhausted.
const MASS_EPS: f64 = 1e-14;

pub(crate) struct FlowSolution {
    /// Dense `n × m` flow matrix.
    pub flow: Vec<f64>,
    /// Potentials of the supply nodes.
    pub pi_rows: Vec<f64>,
    /// Potentials of the demand nodes.
    pub pi_cols: Vec<f64>,
}

/// Solves `min Σ c_ij f_ij` subject to row sums `a` and column sums `b`.
///
/// `cost` is dense row-major `n × m`; every weight must be positive.
pub(crate) fn transport_ssp(a: &[f64], b: &[f64], cost: &[f64]) -> FlowSolution {
    let n = a.len();
    let m = b.len();
    debug_assert_eq!(cost.len(), n * m);
    // node ids: S = 0, rows 1..=n, cols n+1..=n+m, T = n+m+1
    let nodes = n + m + 2;
    let sink = nodes - 1;
    let row = |i: usize| 1 + i;
    let col = |j: usize| 1 + n + j;

    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    let mut flow = vec![0.0; n * m];
    let mut pi = vec![0.0; nodes];

    let mut dist = vec![f64::INFINITY; nodes];
    let mut done = vec![false; nodes];
    let mut pred = vec![usize::MAX; nodes];

    loop {
        if supply.iter().all(|&s| s <= MASS_EPS) || demand.iter().all(|&d| d <= MASS_EPS) {
            break;
        }
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        done.iter_mut().for_each(|d| *d = false);
        pred.iter_mut().for_each(|p| *p = usize::MAX);
        dist[0] = 0.0;

        loop {
            // lowest tentative distance, lowest index on ties
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX || u == sink {
                break;
            }
            done[u] = true;
            let du = dist[u];
            let relax = |v: usize, c: f64, dist: &mut [f64], pred: &mut [usize]| {
                let rc = (c + pi[u] - pi[v]).max(0.0);
                if du + rc < dist[v] {
                    dist[v] = du + rc;
                    pred[v] = u;
                }
            };
            if u == 0 {
                for i in 0..n {
                    if supply[i] > MASS_EPS && !done[row(i)] {
                        relax(row(i), 0.0, &mut dist, &mut pred);
                    }
                }
            } else if u <= n {
                let i = u - 1;
                for j in 0..m {
                    if !done[col(j)] {
                        relax(col(j), cost[i * m + j], &mut dist, &mut pred);
                    }
                }
            } else {
                let j = u - 1 - n;
                for i in 0..n {
                    if flow[i * m + j] > MASS_EPS && !done[row(i)] {
                        relax(row(i), -cost[i * m + j], &mut dist, &mut pred);
                    }
                }
                if demand[j] > MASS_EPS {
                    relax(sink, 0.0, &mut dist, &mut pred);
                }
            }
        }
        if !dist[sink].is_finite() {
            break;
        }
        let dt = dist[sink];
        for v in 0..nodes {
            pi[v] += dist[v].min(dt);
        }

        // walk back T ← col ← row ← ... ← S collecting the bottleneck
        let mut path = Vec::new();
        let mut v = sink;
        while v != 0 {
            path.push(v);
            v = pred[v];
        }
        path.push(0);
        path.reverse();
        #[derive(Clone, Copy, PartialEq)]
        enum Limit {
            Supply(usize),
            Demand(usize),
            Back(usize, usize),
        }
        let first_row = path[1] - 1;
        let last_col = path[path.len() - 2] - 1 - n;
        let mut delta = supply[first_row];
        let mut limit = Limit::Supply(first_row);
        if demand[last_col] < delta {
            delta = demand[last_col];
            limit = Limit::Demand(last_col);
        }
        for w in path[1..path.len() - 1].windows(2) {
            if w[0] > n {
                let (j, i) = (w[0] - 1 - n, w[1] - 1);
                if flow[i * m + j] < delta {
                    delta = flow[i * m + j];
                    limit = Limit::Back(i, j);
                }
            }
        }
        supply[first_row] -= delta;
        demand[last_col] -= delta;
        for w in path[1..path.len() - 1].windows(2) {
            if w[0] <= n {
                let (i, j) = (w[0] - 1, w[1] - 1 - n);
                flow[i * m + j] += delta;
            } else {
                let (j, i) = (w[0] - 1 - n, w[1] - 1);
                flow[i * m + j] -= delta;
            }
        }
        match limit {
            Limit::Supply(i) => supply[i] = 0.0,
            Limit::Demand(j) => demand[j] = 0.0,
            Limit::Back(i, j) => flow[i * m + j] = 0.0,
        }
    }

    FlowSolution {
        flow,
        pi_rows: (0..n).map(|i| pi[row(i)]).collect(),
        pi_cols: (0..m).map(|j| pi[col(j)]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive search over permutations for equal-weight square instances.
    fn best_assignment(cost: &[f64], n: usize) -> f64 {
        fn rec(cost: &[f64], n: usize, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(cost, n, row + 1, used, acc + cost[row * n + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, n, 0, &mut vec![false; n], 0.0, &mut best);
        best / n as f64
    }

    #[test]
    fn matches_assignment_enumeration() {
        let mut rng = crate::measures::rng::SplitMix64::new(5);
        for n in 1..=6 {
            for _ in 0..20 {
                let cost: Vec<f64> = (0..n * n).map(|_| rng.next_f64()).collect();
                let w = vec![1.0 / n as f64; n];
                let sol = transport_ssp(&w, &w, &cost);
                let got: f64 = sol.flow.iter().zip(&cost).map(|(f, c)| f * c).sum();
                assert!((got - best_assignment(&cost, n)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unbalanced_supports() {
        // two suppliers, three consumers on a line
        let a = [0.5, 0.5];
        let b = [0.2, 0.3, 0.5];
        let xs = [0.0_f64, 1.0];
        let ys = [0.0, 0.5, 1.0];
        let cost: Vec<f64> = xs.iter().flat_map(|x| ys.iter().map(move |y| (x - y).abs())).collect();
        let sol = transport_ssp(&a, &b, &cost);
        let got: f64 = sol.flow.iter().zip(&cost).map(|(f, c)| f * c).sum();
        assert!((got - 0.15).abs() < 1e-15);
        for i in 0..2 {
            let s: f64 = sol.flow[i * 3..i * 3 + 3].iter().sum();
            assert!((s - a[i]).abs() < 1e-15);
        }
    }
}
