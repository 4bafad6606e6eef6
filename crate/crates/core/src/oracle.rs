//! Brute-force reference implementations for tests.
//!
//! Everything here is deliberately naive and shares no linear algebra or
//! flow code with the solver.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::graph::FlowInstance;

/// Outcome of the successive-shortest-paths oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleFlow {
    Optimal { flow: Vec<i64>, cost: i64 },
    /// `cut[v]` marks a vertex set whose net supply exceeds the capacity
    /// leaving it.
    Infeasible { cut: Vec<bool> },
}

impl OracleFlow {
    pub fn cost(&self) -> Option<i64> {
        match self {
            OracleFlow::Optimal { cost, .. } => Some(*cost),
            OracleFlow::Infeasible { .. } => None,
        }
    }
}

struct Residual {
    head: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<i64>,
    adj: Vec<Vec<usize>>,
}

impl Residual {
    fn new(n: usize) -> Self {
        Self {
            head: vec![],
            cap: vec![],
            cost: vec![],
            adj: vec![Vec::new(); n],
        }
    }

    fn add(&mut self, t: usize, h: usize, cap: i64, cost: i64) -> usize {
        let id = self.head.len();
        self.head.extend([h, t]);
        self.cap.extend([cap, 0]);
        self.cost.extend([cost, -cost]);
        self.adj[t].push(id);
        self.adj[h].push(id + 1);
        id
    }
}

/// Successive shortest paths. Negative-cost arcs are saturated up front so
/// every residual cost starts nonnegative; Bellman-Ford then seeds the
/// potentials and Dijkstra finds each augmenting path.
pub fn ssp_min_cost_flow(inst: &FlowInstance) -> OracleFlow {
    let g = &inst.graph;
    let n = g.n();
    let (src, snk) = (n, n + 1);
    let mut r = Residual::new(n + 2);
    let mut base = vec![0i64; g.m()];
    let mut inflow = vec![0i64; n];
    let mut arc_of = Vec::with_capacity(g.m());
    for (e, &(t, h)) in g.edges().iter().enumerate() {
        let (u, c) = (inst.capacity[e], inst.cost[e]);
        if c < 0 {
            base[e] = u;
            inflow[h] += u;
            inflow[t] -= u;
            // reversed arc undoes the saturation at cost -c > 0
            arc_of.push((r.add(h, t, u, -c), true));
        } else {
            arc_of.push((r.add(t, h, u, c), false));
        }
    }
    let mut need = 0i64;
    for v in 0..n {
        let gap = inst.demand[v] - inflow[v];
        if gap > 0 {
            r.add(v, snk, gap, 0);
            need += gap;
        } else if gap < 0 {
            r.add(src, v, -gap, 0);
        }
    }

    let nn = n + 2;
    let mut pot = bellman_ford(&r, src, nn);
    while need > 0 {
        let mut dist = vec![i64::MAX; nn];
        let mut prev = vec![usize::MAX; nn];
        dist[src] = 0;
        let mut pq = BinaryHeap::new();
        pq.push(Reverse((0i64, src)));
        while let Some(Reverse((d, x))) = pq.pop() {
            if d > dist[x] {
                continue;
            }
            for &a in &r.adj[x] {
                if r.cap[a] == 0 {
                    continue;
                }
                let y = r.head[a];
                let nd = d + r.cost[a] + pot[x] - pot[y];
                if nd < dist[y] {
                    dist[y] = nd;
                    prev[y] = a;
                    pq.push(Reverse((nd, y)));
                }
            }
        }
        if dist[snk] == i64::MAX {
            let cut = (0..n).map(|v| dist[v] != i64::MAX).collect();
            return OracleFlow::Infeasible { cut };
        }
        let far = dist.iter().copied().filter(|&d| d != i64::MAX).max().unwrap_or(0);
        for v in 0..nn {
            pot[v] += if dist[v] == i64::MAX { far } else { dist[v] };
        }
        let mut push = need;
        let mut y = snk;
        while y != src {
            let a = prev[y];
            push = push.min(r.cap[a]);
            y = r.head[a ^ 1];
        }
        let mut y = snk;
        while y != src {
            let a = prev[y];
            r.cap[a] -= push;
            r.cap[a ^ 1] += push;
            y = r.head[a ^ 1];
        }
        need -= push;
    }

    let flow: Vec<i64> = arc_of
        .iter()
        .enumerate()
        .map(|(e, &(a, reversed))| {
            let pushed = r.cap[a ^ 1];
            if reversed {
                base[e] - pushed
            } else {
                pushed
            }
        })
        .collect();
    let cost = inst.flow_cost(&flow);
    OracleFlow::Optimal { flow, cost }
}

fn bellman_ford(r: &Residual, src: usize, nn: usize) -> Vec<i64> {
    // unreachable vertices keep potential 0; every cost is nonnegative here
    // so this only tightens the initial potentials
    let mut d = vec![0i64; nn];
    d[src] = 0;
    for _ in 0..nn {
        let mut changed = false;
        for x in 0..nn {
            for &a in &r.adj[x] {
                if r.cap[a] > 0 && d[x] + r.cost[a] < d[r.head[a]] {
                    d[r.head[a]] = d[x] + r.cost[a];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    d
}

/// True when `cut` certifies infeasibility: its net supply exceeds the total
/// capacity of arcs leaving it.
pub fn check_cut_certificate(inst: &FlowInstance, cut: &[bool]) -> bool {
    let supply: i64 = (0..inst.graph.n()).filter(|&v| cut[v]).map(|v| -inst.demand[v]).sum();
    let out: i64 = inst
        .graph
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, &(t, h))| cut[t] && !cut[h])
        .map(|(e, _)| inst.capacity[e])
        .sum();
    supply > out
}

/// Checks complementary slackness for an integral flow by searching for a
/// negative cycle in its residual graph.
pub fn is_optimal_flow(inst: &FlowInstance, flow: &[i64]) -> bool {
    let g = &inst.graph;
    let n = g.n();
    let mut arcs = Vec::new();
    for (e, &(t, h)) in g.edges().iter().enumerate() {
        if flow[e] < inst.capacity[e] {
            arcs.push((t, h, inst.cost[e]));
        }
        if flow[e] > 0 {
            arcs.push((h, t, -inst.cost[e]));
        }
    }
    let mut d = vec![0i64; n];
    for _ in 0..=n {
        let mut changed = false;
        for &(t, h, c) in &arcs {
            if d[t] + c < d[h] {
                d[h] = d[t] + c;
                changed = true;
            }
        }
        if !changed {
            return true;
        }
    }
    false
}

/// Minimum-norm solution of `L x = b` for a symmetric Laplacian-like `L`
/// given as rows. `b` is first projected onto the range (per-component mean
/// removed), each component is grounded at its first vertex and solved by
/// partial-pivot Gaussian elimination, and the result is re-centred.
pub fn dense_pinv_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut comp = vec![usize::MAX; n];
    let mut comps = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = vec![s];
        comp[s] = id;
        let mut i = 0;
        while i < members.len() {
            let x = members[i];
            for y in 0..n {
                if comp[y] == usize::MAX && y != x && (l[x][y] != 0.0 || l[y][x] != 0.0) {
                    comp[y] = id;
                    members.push(y);
                }
            }
            i += 1;
        }
        comps.push(members);
    }
    let mut x = vec![0.0; n];
    for members in &comps {
        let mean = members.iter().map(|&v| b[v]).sum::<f64>() / members.len() as f64;
        let rest = &members[1..];
        let k = rest.len();
        if k > 0 {
            let mut a: Vec<Vec<f64>> = rest
                .iter()
                .map(|&i| {
                    let mut row: Vec<f64> = rest.iter().map(|&j| l[i][j]).collect();
                    row.push(b[i] - mean);
                    row
                })
                .collect();
            let sol = gauss_solve(&mut a);
            for (&v, s) in rest.iter().zip(sol) {
                x[v] = s;
            }
        }
        let xm = members.iter().map(|&v| x[v]).sum::<f64>() / members.len() as f64;
        for &v in members {
            x[v] -= xm;
        }
    }
    x
}

/// Solves an augmented system `[A | b]` in place.
fn gauss_solve(a: &mut [Vec<f64>]) -> Vec<f64> {
    let k = a.len();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        let p = a[col][col];
        assert!(p.abs() > 0.0, "singular system in oracle");
        for i in col + 1..k {
            let f = a[i][col] / p;
            if f != 0.0 {
                for j in col..=k {
                    a[i][j] -= f * a[col][j];
                }
            }
        }
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| a[i][j] * x[j]).sum();
        x[i] = (a[i][k] - s) / a[i][i];
    }
    x
}

/// Potentials `x = L^+ B^T W^{1/2} v` behind [`dense_projection`].
pub fn dense_potentials(n: usize, edges: &[(usize, usize)], w: &[f64], v: &[f64]) -> Vec<f64> {
    let mut l = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    for (e, &(t, h)) in edges.iter().enumerate() {
        if t == h {
            continue;
        }
        l[t][t] += w[e];
        l[h][h] += w[e];
        l[t][h] -= w[e];
        l[h][t] -= w[e];
        let y = w[e].sqrt() * v[e];
        rhs[h] += y;
        rhs[t] -= y;
    }
    dense_pinv_solve(&l, &rhs)
}

/// Dense `P_w v = W^{1/2} B (B^T W B)^+ B^T W^{1/2} v` for the incidence of
/// `edges` (self loops give zero rows).
pub fn dense_projection(n: usize, edges: &[(usize, usize)], w: &[f64], v: &[f64]) -> Vec<f64> {
    let x = dense_potentials(n, edges, w, v);
    edges
        .iter()
        .enumerate()
        .map(|(e, &(t, h))| w[e].sqrt() * (x[h] - x[t]))
        .collect()
}

/// Exact treewidth by the elimination-ordering DP over vertex subsets.
/// Intended for `n <= 16`.
pub fn exact_treewidth(n: usize, edges: &[(usize, usize)]) -> usize {
    assert!(n <= 20, "subset DP is exponential");
    if n == 0 {
        return 0;
    }
    let mut adj = vec![0u32; n];
    for &(u, v) in edges {
        if u != v {
            adj[u] |= 1 << v;
            adj[v] |= 1 << u;
        }
    }
    // q(s, v): vertices outside s + v reachable from v through s
    let q = |s: u32, v: usize| -> u32 {
        let mut seen = 1u32 << v;
        let mut frontier = 1u32 << v;
        let mut found = 0u32;
        while frontier != 0 {
            let x = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let nb = adj[x] & !seen;
            seen |= nb;
            found |= nb & !s;
            frontier |= nb & s;
        }
        found
    };
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut tw = vec![usize::MAX; 1usize << n];
    tw[0] = 0;
    for s in 1..=full {
        let mut best = usize::MAX;
        let mut rest = s;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let without = s & !(1 << v);
            let cand = tw[without as usize].max(q(without, v).count_ones() as usize);
            best = best.min(cand);
        }
        tw[s as usize] = best;
    }
    tw[full as usize]
}

/// Edmonds-Karp max flow on integer capacities. Returns the value and the
/// source side of a minimum cut.
pub fn max_flow(n: usize, arcs: &[(usize, usize, i64)], s: usize, t: usize) -> (i64, Vec<bool>) {
    let mut r = Residual::new(n);
    for &(a, b, c) in arcs {
        r.add(a, b, c, 0);
    }
    let mut value = 0;
    loop {
        let mut prev = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for &a in &r.adj[x] {
                let y = r.head[a];
                if r.cap[a] > 0 && !seen[y] {
                    seen[y] = true;
                    prev[y] = a;
                    queue.push_back(y);
                }
            }
        }
        if !seen[t] || s == t {
            return (value, seen);
        }
        let mut push = i64::MAX;
        let mut y = t;
        while y != s {
            push = push.min(r.cap[prev[y]]);
            y = r.head[prev[y] ^ 1];
        }
        let mut y = t;
        while y != s {
            r.cap[prev[y]] -= push;
            r.cap[prev[y] ^ 1] += push;
            y = r.head[prev[y] ^ 1];
        }
        value += push;
    }
}

fn reaches(n: usize, adj: &[Vec<usize>], removed: u64, from: &[usize], to: &[usize]) -> bool {
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = from
        .iter()
        .copied()
        .filter(|&v| removed >> v & 1 == 0)
        .collect();
    for &v in &stack {
        seen[v] = true;
    }
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if !seen[y] && removed >> y & 1 == 0 {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    to.iter().any(|&v| seen[v])
}

fn undirected_adj(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        if u != v {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    adj
}

/// Smallest vertex set (possibly containing vertices of `a` or `b`) whose
/// removal leaves no path from `a` to `b`, by enumeration in order of size.
pub fn min_vertex_cut_enumerate(
    n: usize,
    edges: &[(usize, usize)],
    a: &[usize],
    b: &[usize],
) -> usize {
    assert!(n <= 20);
    let adj = undirected_adj(n, edges);
    for size in 0..=n {
        if subsets_of_size(n, size).any(|s| !reaches(n, &adj, s, a, b)) {
            return size;
        }
    }
    n
}

fn subsets_of_size(n: usize, k: usize) -> impl Iterator<Item = u64> {
    (0u64..1 << n).filter(move |s| s.count_ones() as usize == k)
}

/// Smallest `|S|` such that every component of `G - S` has at most
/// `balance * n` vertices.
pub fn min_balanced_separator_enumerate(n: usize, edges: &[(usize, usize)], balance: f64) -> usize {
    assert!(n <= 20);
    let adj = undirected_adj(n, edges);
    let limit = (balance * n as f64).floor() as usize;
    for size in 0..=n {
        for s in subsets_of_size(n, size) {
            let mut seen = s;
            let mut ok = true;
            for v in 0..n {
                if seen >> v & 1 == 1 {
                    continue;
                }
                let mut count = 0;
                let mut stack = vec![v];
                seen |= 1 << v;
                while let Some(x) = stack.pop() {
                    count += 1;
                    for &y in &adj[x] {
                        if seen >> y & 1 == 0 {
                            seen |= 1 << y;
                            stack.push(y);
                        }
                    }
                }
                if count > limit {
                    ok = false;
                    break;
                }
            }
            if ok {
                return size;
            }
        }
    }
    n
}

/// Minimum capacity of a directed cut `(S, V\S)` with both sides of size at
/// least `min_side`, by enumeration.
pub fn min_balanced_directed_cut(n: usize, arcs: &[(usize, usize, i64)], min_side: usize) -> i64 {
    assert!(n <= 24);
    let mut best = i64::MAX;
    for s in 0u64..1 << n {
        let k = s.count_ones() as usize;
        if k < min_side || n - k < min_side {
            continue;
        }
        let cap: i64 = arcs
            .iter()
            .filter(|&&(a, b, _)| s >> a & 1 == 1 && s >> b & 1 == 0)
            .map(|a| a.2)
            .sum();
        best = best.min(cap);
    }
    best
}
