//! Approximate tree decompositions from flow-based balanced separators.
//!
//! A balanced vertex separator of `G` is found as a balanced directed edge
//! cut of the split graph `G*`, where every vertex `v` becomes an arc
//! `v -> v'` of capacity 1 and every edge `{u, v}` becomes arcs `u' -> v`
//! and `v' -> u` of capacity `n + 1`. Cuts come from max-flow computations
//! between terminal sets drawn from breadth-first orders. The recursion
//! places a separator together with the inherited interface in each bag.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::graph::{connected_components, DirectedGraph, FlowInstance, TreeDecomposition};
use crate::mincost::{self, SolveOutcome};
use crate::ripm::IpmSettings;

/// Balance handed to the edge-separator routine: both sides keep at least
/// this fraction of the vertices.
pub const DEFAULT_BALANCE: f64 = 1.0 / 3.0;

/// A directed graph with arc capacities and a balance constant.
#[derive(Debug, Clone)]
pub struct EdgeCutInstance {
    pub n: usize,
    pub arcs: Vec<(usize, usize)>,
    pub capacity: Vec<i64>,
    pub balance: f64,
}

impl EdgeCutInstance {
    /// Total capacity of arcs leaving `side`.
    pub fn cut_capacity(&self, side: &[bool]) -> i64 {
        self.arcs
            .iter()
            .zip(&self.capacity)
            .filter(|(&(a, b), _)| side[a] && !side[b])
            .map(|(_, &c)| c)
            .sum()
    }

    /// Whether both sides hold at least `c n` vertices.
    pub fn is_balanced(&self, side: &[bool], c: f64) -> bool {
        let k = side.iter().filter(|&&x| x).count() as f64;
        let need = c * self.n as f64;
        k >= need && self.n as f64 - k >= need
    }

    fn capacitated(&self) -> Vec<(usize, usize, i64)> {
        self.arcs
            .iter()
            .zip(&self.capacity)
            .map(|(&(a, b), &c)| (a, b, c))
            .collect()
    }
}

/// In-copy of `v` in the split graph.
pub fn in_node(v: usize) -> usize {
    v
}

/// Out-copy of `v` in a split graph over `n` vertices.
pub fn out_node(n: usize, v: usize) -> usize {
    n + v
}

/// Split graph `G*` of an undirected graph. Arcs `0..n` are the vertex arcs
/// `v -> v'`; the remaining arcs are the adjacency arcs, two per ordered
/// pair of adjacent vertices, so four per undirected edge.
pub fn vertex_to_edge_reduction(n: usize, edges: &[(usize, usize)], balance: f64) -> EdgeCutInstance {
    let big = n as i64 + 1;
    let mut arcs: Vec<(usize, usize)> = (0..n).map(|v| (in_node(v), out_node(n, v))).collect();
    let mut capacity = vec![1; n];
    for &(u, v) in edges {
        if u == v {
            continue;
        }
        for (a, b) in [(u, v), (v, u)] {
            arcs.push((out_node(n, a), in_node(b)));
            arcs.push((out_node(n, b), in_node(a)));
            capacity.extend([big, big]);
        }
    }
    EdgeCutInstance {
        n: 2 * n,
        arcs,
        capacity,
        balance,
    }
}

/// Single-commodity max flow used by the separator routines.
pub trait MaxFlowEngine {
    /// Value of a maximum `s`-`t` flow and the source side of a minimum cut.
    fn max_flow(&mut self, n: usize, arcs: &[(usize, usize, i64)], s: usize, t: usize) -> Result<(i64, Vec<bool>)>;

    fn name(&self) -> &'static str;
}

/// Blocking-flow max flow with integer capacities.
#[derive(Debug, Default, Clone, Copy)]
pub struct Dinic;

struct FlowNet {
    head: Vec<usize>,
    cap: Vec<i64>,
    adj: Vec<Vec<usize>>,
}

impl FlowNet {
    fn new(n: usize, arcs: &[(usize, usize, i64)]) -> Self {
        let mut net = FlowNet {
            head: Vec::with_capacity(2 * arcs.len()),
            cap: Vec::with_capacity(2 * arcs.len()),
            adj: vec![Vec::new(); n],
        };
        for &(a, b, c) in arcs {
            net.adj[a].push(net.head.len());
            net.head.push(b);
            net.cap.push(c);
            net.adj[b].push(net.head.len());
            net.head.push(a);
            net.cap.push(0);
        }
        net
    }

    fn levels(&self, s: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &e in &self.adj[v] {
                let w = self.head[e];
                if self.cap[e] > 0 && level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        level
    }

    fn augment(&mut self, v: usize, t: usize, limit: i64, level: &[usize], next: &mut [usize]) -> i64 {
        if v == t {
            return limit;
        }
        while next[v] < self.adj[v].len() {
            let e = self.adj[v][next[v]];
            let w = self.head[e];
            if self.cap[e] > 0 && level[w] == level[v] + 1 {
                let pushed = self.augment(w, t, limit.min(self.cap[e]), level, next);
                if pushed > 0 {
                    self.cap[e] -= pushed;
                    self.cap[e ^ 1] += pushed;
                    return pushed;
                }
            }
            next[v] += 1;
        }
        0
    }
}

impl MaxFlowEngine for Dinic {
    fn max_flow(&mut self, n: usize, arcs: &[(usize, usize, i64)], s: usize, t: usize) -> Result<(i64, Vec<bool>)> {
        if s == t || s >= n || t >= n {
            return Err(Error::InvalidGraph(format!("bad terminals {s}, {t} for {n} vertices")));
        }
        let mut net = FlowNet::new(n, arcs);
        let mut value = 0i64;
        loop {
            let level = net.levels(s);
            if level[t] == usize::MAX {
                let side = level.iter().map(|&l| l != usize::MAX).collect();
                return Ok((value, side));
            }
            let mut next = vec![0; n];
            loop {
                let pushed = net.augment(s, t, i64::MAX, &level, &mut next);
                if pushed == 0 {
                    break;
                }
                value += pushed;
            }
        }
    }

    fn name(&self) -> &'static str {
        "dinic"
    }
}

/// Max flow through the interior-point min-cost flow solver: a return arc
/// `t -> s` of cost `-1` turns the maximum flow into the cheapest
/// circulation. The decomposition of the flow graph comes from min-fill.
#[derive(Debug, Clone, Default)]
pub struct IpmEngine {
    pub settings: IpmSettings,
}

impl MaxFlowEngine for IpmEngine {
    fn max_flow(&mut self, n: usize, arcs: &[(usize, usize, i64)], s: usize, t: usize) -> Result<(i64, Vec<bool>)> {
        if s == t || s >= n || t >= n {
            return Err(Error::InvalidGraph(format!("bad terminals {s}, {t} for {n} vertices")));
        }
        let out_of_s: i64 = arcs.iter().filter(|a| a.0 == s).map(|a| a.2).sum();
        let mut edges: Vec<(usize, usize)> = arcs.iter().map(|a| (a.0, a.1)).collect();
        let mut capacity: Vec<i64> = arcs.iter().map(|a| a.2).collect();
        let mut cost = vec![0i64; arcs.len()];
        edges.push((t, s));
        capacity.push(out_of_s.max(1));
        cost.push(-1);
        let inst = FlowInstance::new(DirectedGraph::new(n, edges.clone())?, vec![0; n], capacity, cost)?;
        let td = min_fill_decomposition(n, &edges, 0);
        let flow = match mincost::solve(&inst, &td, &self.settings, &mut ())? {
            SolveOutcome::Optimal(sol) => sol.flow,
            SolveOutcome::Infeasible { .. } => {
                return Err(Error::Infeasible("a circulation problem cannot be infeasible".into()))
            }
        };
        let value = flow[arcs.len()];
        let mut adj = vec![Vec::new(); n];
        for (e, &(a, b, c)) in arcs.iter().enumerate() {
            if flow[e] < c {
                adj[a].push(b);
            }
            if flow[e] > 0 {
                adj[b].push(a);
            }
        }
        let mut side = vec![false; n];
        side[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !side[w] {
                    side[w] = true;
                    stack.push(w);
                }
            }
        }
        Ok((value, side))
    }

    fn name(&self) -> &'static str {
        "ipm"
    }
}

/// Minimum cut between two terminal sets: the source side contains
/// `sources` and avoids `sinks`.
pub fn min_cut_between(
    inst: &EdgeCutInstance,
    engine: &mut dyn MaxFlowEngine,
    sources: &[usize],
    sinks: &[usize],
) -> Result<(i64, Vec<bool>)> {
    let n = inst.n;
    let (s, t) = (n, n + 1);
    let inf = inst.capacity.iter().sum::<i64>() + 1;
    let mut arcs = inst.capacitated();
    arcs.extend(sources.iter().map(|&v| (s, v, inf)));
    arcs.extend(sinks.iter().map(|&v| (v, t, inf)));
    let (value, mut side) = engine.max_flow(n + 2, &arcs, s, t)?;
    side.truncate(n);
    Ok((value, side))
}

/// Breadth-first order over all vertices of an undirected adjacency,
/// starting at `start` and continuing in unvisited components.
fn bfs_order(adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for root in std::iter::once(start).chain(0..n) {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order
}

fn undirected_adj(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a != b {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Number of terminal-selection rounds for a graph on `n` vertices.
pub fn separator_rounds(n: usize) -> usize {
    let l = (n.max(2) as f64).log2().ceil() as usize;
    (l * l).clamp(1, 64)
}

/// Piercing sweeps per vertex-separator call.
pub const PIERCE_ROUNDS: usize = 4;

/// A directed edge cut.
#[derive(Debug, Clone)]
pub struct EdgeCut {
    pub side: Vec<bool>,
    pub capacity: i64,
    /// Whether the cut meets the requested balance.
    pub balanced: bool,
}

/// Balanced directed edge cut of `inst`. Each round takes the first and
/// last `⌈c n⌉` vertices of a breadth-first order from a random start (or
/// from the far end of the previous order) as terminal sets, so every cut
/// it returns is `c`-balanced by construction. The cheapest cut is kept.
pub fn balanced_edge_separator(
    inst: &EdgeCutInstance,
    engine: &mut dyn MaxFlowEngine,
    rng: &mut impl Rng,
) -> Result<EdgeCut> {
    let n = inst.n;
    let k = (inst.balance * n as f64).ceil().max(1.0) as usize;
    if n < 2 || 2 * k > n {
        let side: Vec<bool> = (0..n).map(|v| v < n / 2).collect();
        let capacity = inst.cut_capacity(&side);
        let balanced = inst.is_balanced(&side, inst.balance);
        if !balanced {
            log::warn!("no {}-balanced cut exists on {n} vertices", inst.balance);
        }
        return Ok(EdgeCut {
            side,
            capacity,
            balanced,
        });
    }
    let adj = undirected_adj(n, &inst.arcs);
    let mut best: Option<EdgeCut> = None;
    let mut start = rng.gen_range(0..n);
    for round in 0..separator_rounds(n) {
        let order = bfs_order(&adj, start);
        let sources = &order[..k];
        let sinks = &order[n - k..];
        let (value, side) = min_cut_between(inst, engine, sources, sinks)?;
        if best.as_ref().map_or(true, |b| value < b.capacity) {
            best = Some(EdgeCut {
                balanced: inst.is_balanced(&side, inst.balance),
                side,
                capacity: value,
            });
        }
        start = if round % 2 == 0 { order[n - 1] } else { rng.gen_range(0..n) };
    }
    Ok(best.expect("at least one round"))
}

/// A vertex separator `S` with no edge between `A` and `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSeparator {
    pub a: Vec<usize>,
    pub sep: Vec<usize>,
    pub b: Vec<usize>,
}

/// Reads `(A, S, B)` off a cut of the split graph: `v` is in `S` when only
/// its in-copy is on the source side, in `A` when both copies are, and in
/// `B` otherwise.
pub fn separator_from_cut(n: usize, side: &[bool]) -> VertexSeparator {
    let mut out = VertexSeparator {
        a: Vec::new(),
        sep: Vec::new(),
        b: Vec::new(),
    };
    for v in 0..n {
        match (side[in_node(v)], side[out_node(n, v)]) {
            (true, true) => out.a.push(v),
            (true, false) => out.sep.push(v),
            _ => out.b.push(v),
        }
    }
    out
}

/// Separator of minimum size found over several rounds. Terminal sets are
/// the first and last `⌈n / 3⌉` vertices of breadth-first orders, entered
/// at the in-copies and left at the out-copies, so that `A` misses the
/// sinks and `B` misses the sources: both hold at most `2n/3` vertices.
/// With `terminals`, the given sets replace the breadth-first ones.
pub fn balanced_vertex_separator(
    n: usize,
    edges: &[(usize, usize)],
    engine: &mut dyn MaxFlowEngine,
    rng: &mut impl Rng,
    terminals: Option<(&[usize], &[usize])>,
) -> Result<VertexSeparator> {
    if n == 0 {
        return Ok(VertexSeparator {
            a: vec![],
            sep: vec![],
            b: vec![],
        });
    }
    let inst = vertex_to_edge_reduction(n, edges, DEFAULT_BALANCE);
    let cut = |x: &[usize], y: &[usize], engine: &mut dyn MaxFlowEngine| -> Result<VertexSeparator> {
        let sources: Vec<usize> = x.iter().map(|&v| in_node(v)).collect();
        let sinks: Vec<usize> = y.iter().map(|&v| out_node(n, v)).collect();
        let (_, side) = min_cut_between(&inst, engine, &sources, &sinks)?;
        Ok(separator_from_cut(n, &side))
    };
    if let Some((x, y)) = terminals {
        return cut(x, y, engine);
    }
    let k = n.div_ceil(3);
    if 2 * k > n {
        // too small to split: everything goes to the separator
        return Ok(VertexSeparator {
            a: vec![],
            sep: (0..n).collect(),
            b: vec![],
        });
    }
    let adj = undirected_adj(n, edges);
    let mut best: Option<VertexSeparator> = None;
    let keep = |found: VertexSeparator, best: &mut Option<VertexSeparator>| {
        if best.as_ref().map_or(true, |b| found.sep.len() < b.sep.len()) {
            *best = Some(found);
        }
    };
    let rounds = separator_rounds(n);
    let mut start = rng.gen_range(0..n);
    for round in 0..rounds.div_ceil(2) {
        let order = bfs_order(&adj, start);
        let found = cut(&order[..k], &order[n - k..], engine)?;
        keep(regroup(&adj, &found.sep).unwrap_or(found), &mut best);
        start = if round % 2 == 0 { order[n - 1] } else { rng.gen_range(0..n) };
    }
    for _ in 0..PIERCE_ROUNDS.min(rounds) {
        let from = rng.gen_range(0..n);
        let s0 = *bfs_order(&adj, from).last().expect("nonempty");
        let t0 = *bfs_order(&adj, s0).last().expect("nonempty");
        if s0 == t0 {
            continue;
        }
        let bound = best.as_ref().map_or(n, |b| b.sep.len());
        if let Some(found) = pierce(&inst, &adj, engine, rng, s0, t0, bound)? {
            keep(found, &mut best);
        }
    }
    Ok(best.expect("at least one round"))
}

/// Splits the components left by `sep` into two sides, largest first onto
/// the lighter side. Returns `None` unless both sides hold at most `2n/3`
/// vertices, which is guaranteed when no component exceeds `n/3`.
pub fn regroup(adj: &[Vec<usize>], sep: &[usize]) -> Option<VertexSeparator> {
    let n = adj.len();
    let mut label = vec![usize::MAX; n];
    for &v in sep {
        label[v] = usize::MAX - 1;
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for root in 0..n {
        if label[root] != usize::MAX {
            continue;
        }
        label[root] = comps.len();
        let mut comp = vec![root];
        let mut i = 0;
        while i < comp.len() {
            let v = comp[i];
            i += 1;
            for &w in &adj[v] {
                if label[w] == usize::MAX {
                    label[w] = comps.len();
                    comp.push(w);
                }
            }
        }
        comps.push(comp);
    }
    comps.sort_by_key(|c| std::cmp::Reverse(c.len()));
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for comp in comps {
        if a.len() <= b.len() {
            a.extend(comp);
        } else {
            b.extend(comp);
        }
    }
    if 3 * a.len() > 2 * n || 3 * b.len() > 2 * n {
        return None;
    }
    a.sort_unstable();
    b.sort_unstable();
    let mut sep = sep.to_vec();
    sep.sort_unstable();
    Some(VertexSeparator { a, sep, b })
}

/// Two-sided piercing sweep between `s0` and `t0`. After each minimum cut
/// the smaller of the two reachable sides absorbs the vertices of its cut
/// that open no augmenting path, or one cut vertex when none qualify. Cut values only grow, so the first cut whose separator regroups
/// into two sides of at most `2n/3` is the cheapest on this sweep, and the
/// sweep stops once the cut reaches `bound` vertices.
fn pierce(
    inst: &EdgeCutInstance,
    adj: &[Vec<usize>],
    engine: &mut dyn MaxFlowEngine,
    rng: &mut impl Rng,
    s0: usize,
    t0: usize,
    bound: usize,
) -> Result<Option<VertexSeparator>> {
    let n = adj.len();
    let reversed = EdgeCutInstance {
        arcs: inst.arcs.iter().map(|&(a, b)| (b, a)).collect(),
        ..inst.clone()
    };
    let mut sources = vec![in_node(s0)];
    let mut sinks = vec![out_node(n, t0)];
    for _ in 0..2 * n {
        let (value, from_s) = min_cut_between(inst, engine, &sources, &sinks)?;
        if value as usize >= bound {
            return Ok(None);
        }
        let (_, to_t) = min_cut_between(&reversed, engine, &sinks, &sources)?;
        let near_s = separator_from_cut(n, &from_s);
        let sink_side: Vec<bool> = to_t.iter().map(|&x| !x).collect();
        let near_t = separator_from_cut(n, &sink_side);
        for found in [&near_s, &near_t] {
            if let Some(grouped) = regroup(adj, &found.sep) {
                return Ok(Some(grouped));
            }
        }
        let size_s = from_s.iter().filter(|&&x| x).count();
        let size_t = to_t.iter().filter(|&&x| x).count();
        if size_s <= size_t {
            // cut vertices join the source side through their out-copies
            let good = |v: &usize| !to_t[out_node(n, *v)];
            let Some(picked) = choose(&near_s.sep, good, rng, |v| v != t0) else { return Ok(None) };
            sources = (0..2 * n).filter(|&u| from_s[u]).collect();
            sources.extend(picked.into_iter().map(|v| out_node(n, v)));
        } else {
            // cut vertices join the sink side through their in-copies
            let good = |v: &usize| !from_s[in_node(*v)];
            let Some(picked) = choose(&near_t.sep, good, rng, |v| v != s0) else { return Ok(None) };
            sinks = (0..2 * n).filter(|&u| to_t[u]).collect();
            sinks.extend(picked.into_iter().map(|v| in_node(v)));
        }
    }
    Ok(None)
}

/// Vertices of `pool` passing `allowed` to absorb next: all of those
/// passing `good`, which leave the cut value unchanged, or else one at random.
fn choose(
    pool: &[usize],
    good: impl Fn(&usize) -> bool,
    rng: &mut impl Rng,
    allowed: impl Fn(usize) -> bool,
) -> Option<Vec<usize>> {
    let ok: Vec<usize> = pool.iter().copied().filter(|&v| allowed(v)).collect();
    let best: Vec<usize> = ok.iter().copied().filter(|v| good(v)).collect();
    if !best.is_empty() {
        return Some(best);
    }
    (!ok.is_empty()).then(|| vec![ok[rng.gen_range(0..ok.len())]])
}

/// Settings of the decomposition recursion.
#[derive(Debug, Clone)]
pub struct TwSettings {
    pub seed: u64,
    /// Subproblems with at most this many active vertices become one bag.
    pub leaf_size: usize,
}

impl Default for TwSettings {
    fn default() -> Self {
        Self { seed: 0, leaf_size: 4 }
    }
}

struct Recursion<'a> {
    adj: Vec<Vec<usize>>,
    engine: &'a mut dyn MaxFlowEngine,
    rng: ChaCha8Rng,
    leaf_size: usize,
    bags: Vec<Vec<usize>>,
    tree: Vec<(usize, usize)>,
    /// Interfaces larger than this are split by the next separator.
    x_limit: usize,
}

impl Recursion<'_> {
    /// Induced subgraph on `verts` in local ids.
    fn induced(&self, verts: &[usize], local: &mut [usize]) -> Vec<(usize, usize)> {
        for (i, &v) in verts.iter().enumerate() {
            local[v] = i;
        }
        let mut edges = Vec::new();
        for (i, &v) in verts.iter().enumerate() {
            for &w in &self.adj[v] {
                let j = local[w];
                if j != usize::MAX && i < j {
                    edges.push((i, j));
                }
            }
        }
        edges
    }

    /// Components of `verts` after removing `removed`.
    fn components(&self, verts: &[usize], removed: &[bool]) -> Vec<Vec<usize>> {
        let mut inside = vec![false; self.adj.len()];
        for &v in verts {
            inside[v] = !removed[v];
        }
        let mut out = Vec::new();
        for &root in verts {
            if !inside[root] {
                continue;
            }
            inside[root] = false;
            let mut comp = vec![root];
            let mut i = 0;
            while i < comp.len() {
                let v = comp[i];
                i += 1;
                for &w in &self.adj[v] {
                    if inside[w] {
                        inside[w] = false;
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Decomposes the connected set `w` with interface `x`; returns the id
    /// of the bag at the top of the subtree.
    fn run(&mut self, w: Vec<usize>, x: Vec<usize>) -> Result<usize> {
        let id = self.bags.len();
        if w.len() <= self.leaf_size {
            let mut bag = x;
            bag.extend(&w);
            bag.sort_unstable();
            self.bags.push(bag);
            return Ok(id);
        }
        let n = self.adj.len();
        let mut local = vec![usize::MAX; n];
        let edges = self.induced(&w, &mut local);

        let terminals = if x.len() > self.x_limit {
            // split the interface: cut between the neighbours of its halves
            let half = x.len() / 2;
            let side_of = |xs: &[usize]| -> Vec<usize> {
                let mut t: Vec<usize> = xs
                    .iter()
                    .flat_map(|&v| self.adj[v].iter())
                    .filter(|&&u| local[u] != usize::MAX)
                    .map(|&u| local[u])
                    .collect();
                t.sort_unstable();
                t.dedup();
                t
            };
            let (t1, t2) = (side_of(&x[..half]), side_of(&x[half..]));
            let disjoint = t1.iter().all(|v| t2.binary_search(v).is_err());
            (!t1.is_empty() && !t2.is_empty() && disjoint).then_some((t1, t2))
        } else {
            None
        };
        let found = balanced_vertex_separator(
            w.len(),
            &edges,
            &mut *self.engine,
            &mut self.rng,
            terminals.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice())),
        )?;
        let mut sep: Vec<usize> = found.sep.iter().map(|&i| w[i]).collect();
        if sep.is_empty() {
            sep.push(w[0]);
        }
        let mut removed = vec![false; n];
        for &v in &sep {
            removed[v] = true;
        }
        let mut bag = x.clone();
        bag.extend(&sep);
        bag.sort_unstable();
        bag.dedup();
        self.bags.push(bag.clone());
        let mut in_bag = vec![false; n];
        for &v in &bag {
            in_bag[v] = true;
        }
        for comp in self.components(&w, &removed) {
            let mut iface: Vec<usize> = comp
                .iter()
                .flat_map(|&v| self.adj[v].iter().copied())
                .filter(|&u| in_bag[u])
                .collect();
            iface.sort_unstable();
            iface.dedup();
            let child = self.run(comp, iface)?;
            self.tree.push((id, child));
        }
        Ok(id)
    }
}

/// Tree decomposition by recursive balanced separation. Components are
/// decomposed separately and their top bags joined in a path.
pub fn build_tree_decomposition(
    n: usize,
    edges: &[(usize, usize)],
    engine: &mut dyn MaxFlowEngine,
    settings: &TwSettings,
) -> Result<TreeDecomposition> {
    if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= n || b >= n) {
        return Err(Error::InvalidGraph(format!("edge ({a}, {b}) out of range for {n} vertices")));
    }
    if n == 0 {
        return Ok(TreeDecomposition::new(vec![], vec![]));
    }
    let adj = undirected_adj(n, edges);
    let mut rec = Recursion {
        adj,
        engine,
        rng: ChaCha8Rng::seed_from_u64(settings.seed),
        leaf_size: settings.leaf_size.max(1),
        bags: Vec::new(),
        tree: Vec::new(),
        x_limit: usize::MAX,
    };
    let (comp, count) = connected_components(n, edges);
    let mut groups = vec![Vec::new(); count];
    for v in 0..n {
        groups[comp[v]].push(v);
    }
    let mut tops = Vec::new();
    for group in groups {
        // interfaces may grow to twice the first separator before splitting
        rec.x_limit = usize::MAX;
        if group.len() > rec.leaf_size {
            let mut local = vec![usize::MAX; n];
            let sub = rec.induced(&group, &mut local);
            let probe = balanced_vertex_separator(group.len(), &sub, &mut *rec.engine, &mut rec.rng, None)?;
            rec.x_limit = 2 * probe.sep.len().max(1) + 2;
        }
        tops.push(rec.run(group, Vec::new())?);
    }
    for pair in tops.windows(2) {
        rec.tree.push((pair[0], pair[1]));
    }
    Ok(TreeDecomposition::new(rec.bags, rec.tree))
}

/// Tree decomposition from a min-fill elimination order. Ties go to the
/// smaller degree, then to a seeded random priority.
pub fn min_fill_decomposition(n: usize, edges: &[(usize, usize)], seed: u64) -> TreeDecomposition {
    if n == 0 {
        return TreeDecomposition::new(vec![], vec![]);
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(a, b) in edges {
        if a != b && a < n && b < n {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut priority: Vec<usize> = (0..n).collect();
    priority.shuffle(&mut rng);
    let fill_of = |adj: &[BTreeSet<usize>], v: usize| -> usize {
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        let mut missing = 0;
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if !adj[a].contains(&b) {
                    missing += 1;
                }
            }
        }
        missing
    };
    let mut fill: Vec<usize> = (0..n).map(|v| fill_of(&adj, v)).collect();
    let mut done = vec![false; n];
    let mut position = vec![0; n];
    let mut later: Vec<Vec<usize>> = vec![Vec::new(); n];
    for step in 0..n {
        let v = (0..n)
            .filter(|&v| !done[v])
            .min_by_key(|&v| (fill[v], adj[v].len(), priority[v]))
            .expect("vertices remain");
        done[v] = true;
        position[v] = step;
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        later[v] = nb.clone();
        for &a in &nb {
            adj[a].remove(&v);
        }
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        adj[v].clear();
        let mut stale: BTreeSet<usize> = nb.iter().copied().collect();
        for &a in &nb {
            stale.extend(adj[a].iter().copied());
        }
        for u in stale {
            fill[u] = fill_of(&adj, u);
        }
    }
    let mut bags = Vec::with_capacity(n);
    let mut tree = Vec::new();
    let mut roots = Vec::new();
    for v in 0..n {
        let mut bag = later[v].clone();
        bag.push(v);
        bag.sort_unstable();
        bags.push(bag);
        match later[v].iter().min_by_key(|&&u| position[u]) {
            Some(&p) => tree.push((p, v)),
            None => roots.push(v),
        }
    }
    for pair in roots.windows(2) {
        tree.push((pair[0], pair[1]));
    }
    TreeDecomposition::new(bags, tree)
}
