//! Exact min-cost flow: an interior-point solve on a padded instance
//! followed by rounding to an integral flow.
//!
//! The instance is padded with a star vertex `z` and arcs `v -> z`, `z -> v`
//! for every vertex, priced at `P = nM + 1` so that no optimal flow uses them
//! unless the demands cannot be met otherwise. The padded instance has an
//! explicit interior point with slack 1/2 and remains of width `τ + 1` once
//! `z` joins every bag.

use crate::error::{Error, Result};
use crate::graph::{flow_to_lp, validate_tree_decomposition, DirectedGraph, FlowInstance, TreeDecomposition};
use crate::ripm::{ripm_solve, IpmSettings, IpmStats, StepObserver};

/// Constant `C` of `ε = 1 / (C M² m²)`, with `M` the bound of the input and
/// `m` the arc count of the padded instance.
pub const EPS_CONSTANT: f64 = 64.0;
/// Largest certified fractional gap that rounding can turn into an optimum.
pub const GAP_LIMIT: f64 = 0.5;
/// Distance from an integer below which a coordinate counts as integral.
pub const INTEGRAL_TOL: f64 = 1e-9;

/// The padded instance with its interior point.
#[derive(Debug, Clone)]
pub struct Padded {
    pub inst: FlowInstance,
    pub td: TreeDecomposition,
    pub star: usize,
    /// Number of original arcs; arcs `m + 2v` and `m + 2v + 1` are `v -> z`
    /// and `z -> v`.
    pub m_orig: usize,
    pub penalty: i64,
    pub interior: Vec<f64>,
    pub radius: f64,
}

/// Pads `inst` and returns a strictly interior feasible point of the padded
/// program: original arcs at half capacity, the residual demand routed
/// through the star.
pub fn find_interior_point(inst: &FlowInstance, td: &TreeDecomposition) -> Result<Padded> {
    let g = &inst.graph;
    let (n, m) = (g.n(), g.m());
    let big_m = inst.bound_m().max(1);
    let penalty = (n as i64) * big_m + 1;
    let mut inflow = vec![0.0; n];
    for (e, &(t, h)) in g.edges().iter().enumerate() {
        let half = inst.capacity[e] as f64 / 2.0;
        inflow[h] += half;
        inflow[t] -= half;
    }
    let mut edges = g.edges().to_vec();
    let mut capacity = inst.capacity.clone();
    let mut cost = inst.cost.clone();
    let mut interior: Vec<f64> = inst.capacity.iter().map(|&u| u as f64 / 2.0).collect();
    for v in 0..n {
        let r = inst.demand[v] as f64 - inflow[v];
        let cap = 2 * (r.abs().ceil() as i64) + 2;
        edges.push((v, n));
        edges.push((n, v));
        capacity.extend([cap, cap]);
        cost.extend([penalty, penalty]);
        interior.push(cap as f64 / 2.0 - r / 2.0);
        interior.push(cap as f64 / 2.0 + r / 2.0);
    }
    let mut demand = inst.demand.clone();
    demand.push(0);
    let padded = FlowInstance::new(DirectedGraph::new(n + 1, edges)?, demand, capacity, cost)?;
    let radius = interior
        .iter()
        .zip(&padded.capacity)
        .map(|(&x, &u)| x.min(u as f64 - x))
        .fold(f64::INFINITY, f64::min);
    Ok(Padded {
        inst: padded,
        td: td.with_vertex_everywhere(n),
        star: n,
        m_orig: m,
        penalty,
        interior,
        radius,
    })
}

#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub flow: Vec<i64>,
    pub cost: i64,
    /// Objective of the fractional solution on the padded instance.
    pub fractional_cost: f64,
    pub stats: IpmStats,
}

#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Optimal(FlowSolution),
    /// `cut` marks a vertex set whose net supply exceeds the capacity leaving
    /// it; `unrouted` units had to use the star.
    Infeasible { cut: Vec<bool>, unrouted: i64, stats: IpmStats },
}

/// Minimum-cost flow of `inst` given a tree decomposition of its graph.
pub fn solve(
    inst: &FlowInstance,
    td: &TreeDecomposition,
    settings: &IpmSettings,
    observer: &mut dyn StepObserver,
) -> Result<SolveOutcome> {
    let g = &inst.graph;
    validate_tree_decomposition(g.n(), g.edges(), td)?;
    if g.n() == 0 {
        return Ok(SolveOutcome::Optimal(FlowSolution {
            flow: vec![],
            cost: 0,
            fractional_cost: 0.0,
            stats: IpmStats::default(),
        }));
    }
    let padded = find_interior_point(inst, td)?;
    let lp = flow_to_lp(&padded.inst)?;
    // the bound of the caller's instance; the star arcs only pad it
    let big_m = inst.bound_m().max(1) as f64;
    let m_new = lp.m() as f64;
    let eps = 1.0 / (EPS_CONSTANT * big_m * big_m * m_new * m_new);
    let out = ripm_solve(&lp, &padded.td, eps, padded.radius, settings, observer)?;
    if !(out.stats.final_gap < GAP_LIMIT) {
        return Err(Error::NotConverged {
            gap: out.stats.final_gap,
            limit: GAP_LIMIT,
        });
    }
    let fractional_cost = lp.objective(&out.f);
    let mut flow = round_to_integral(&padded.inst, &out.f)?;
    let (n, m) = (g.n(), g.m());
    for v in 0..n {
        // a unit through z and straight back only adds cost
        let (a, b) = (m + 2 * v, m + 2 * v + 1);
        let both = flow[a].min(flow[b]);
        flow[a] -= both;
        flow[b] -= both;
    }
    let unrouted: i64 = (0..n).map(|v| flow[m + 2 * v]).sum();
    if unrouted > 0 {
        let cut = residual_cut(&padded, &flow);
        return Ok(SolveOutcome::Infeasible {
            cut,
            unrouted,
            stats: out.stats,
        });
    }
    flow.truncate(m);
    let cost = inst.flow_cost(&flow);
    Ok(SolveOutcome::Optimal(FlowSolution {
        flow,
        cost,
        fractional_cost,
        stats: out.stats,
    }))
}

/// Vertices reachable in the residual graph of the original arcs from the
/// vertices that push flow into the star.
fn residual_cut(padded: &Padded, flow: &[i64]) -> Vec<bool> {
    let g = &padded.inst.graph;
    let n = padded.star;
    let m = padded.m_orig;
    let mut adj = vec![Vec::new(); n];
    for e in 0..m {
        let (t, h) = g.edges()[e];
        if flow[e] < padded.inst.capacity[e] {
            adj[t].push(h);
        }
        if flow[e] > 0 {
            adj[h].push(t);
        }
    }
    let mut seen: Vec<bool> = (0..n).map(|v| flow[m + 2 * v] > 0).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&v| seen[v]).collect();
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

fn is_fractional(x: f64) -> bool {
    (x - x.round()).abs() > INTEGRAL_TOL
}

/// Rounds a fractional flow with integral demands to an integral one of no
/// larger cost. Cycles in the fractional support are pushed in their
/// cheaper direction until one coordinate reaches an integer; coordinates
/// left dangling by numerical noise are rounded to the nearest integer.
pub fn round_to_integral(inst: &FlowInstance, f: &[f64]) -> Result<Vec<i64>> {
    let g = &inst.graph;
    let (n, m) = (g.n(), g.m());
    if f.len() != m {
        return Err(Error::Dimension(format!("{} flow values for {m} arcs", f.len())));
    }
    let mut x: Vec<f64> = f
        .iter()
        .zip(&inst.capacity)
        .map(|(&v, &u)| v.clamp(0.0, u as f64))
        .collect();
    let mut frac: Vec<bool> = x.iter().map(|&v| is_fractional(v)).collect();
    for e in 0..m {
        if !frac[e] {
            x[e] = x[e].round();
        }
    }
    let edges = g.edges();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in (0..m).filter(|&e| frac[e]) {
        adj[edges[e].0].push(e);
        adj[edges[e].1].push(e);
    }
    let mut degree: Vec<usize> = vec![0; n];
    for e in (0..m).filter(|&e| frac[e]) {
        degree[edges[e].0] += 1;
        degree[edges[e].1] += 1;
    }
    let mut remaining = frac.iter().filter(|&&b| b).count();
    let settle = |e: usize, x: &mut [f64], frac: &mut [bool], degree: &mut [usize]| {
        x[e] = x[e].round();
        frac[e] = false;
        degree[edges[e].0] -= 1;
        degree[edges[e].1] -= 1;
    };
    while remaining > 0 {
        // strip dangling fractional arcs first
        let mut queue: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        while let Some(v) = queue.pop() {
            if degree[v] != 1 {
                continue;
            }
            let e = *adj[v].iter().find(|&&e| frac[e]).expect("degree one");
            settle(e, &mut x, &mut frac, &mut degree);
            remaining -= 1;
            let other = if edges[e].0 == v { edges[e].1 } else { edges[e].0 };
            if degree[other] == 1 {
                queue.push(other);
            }
        }
        if remaining == 0 {
            break;
        }
        let cycle = find_cycle(&adj, edges, &frac, &degree);
        // orientation +1 when the arc is traversed tail to head
        let cost: f64 = cycle
            .iter()
            .map(|&(e, dir)| dir * inst.cost[e] as f64)
            .sum();
        let sign = if cost <= 0.0 { 1.0 } else { -1.0 };
        let mut delta = f64::INFINITY;
        for &(e, dir) in &cycle {
            let d = if dir * sign > 0.0 {
                x[e].ceil() - x[e]
            } else {
                x[e] - x[e].floor()
            };
            delta = delta.min(d);
        }
        let mut hit = Vec::new();
        for &(e, dir) in &cycle {
            let step = dir * sign * delta;
            let target = if step > 0.0 { x[e].ceil() } else { x[e].floor() };
            x[e] += step;
            if (target - x[e]).abs() <= INTEGRAL_TOL || !is_fractional(x[e]) {
                x[e] = target;
                hit.push(e);
            }
        }
        for e in hit {
            if frac[e] {
                frac[e] = false;
                degree[edges[e].0] -= 1;
                degree[edges[e].1] -= 1;
                remaining -= 1;
            }
        }
    }
    let out: Vec<i64> = x.iter().map(|v| v.round() as i64).collect();
    let mut net = vec![0i64; n];
    for (e, &(t, h)) in edges.iter().enumerate() {
        net[h] += out[e];
        net[t] -= out[e];
    }
    if net != inst.demand {
        return Err(Error::Infeasible(
            "rounding could not restore conservation; input was not a near-feasible flow".into(),
        ));
    }
    Ok(out)
}

/// A cycle among fractional arcs, all of whose vertices have fractional
/// degree at least two. Entries are `(arc, ±1)` with `+1` meaning the walk
/// crosses the arc from tail to head.
fn find_cycle(
    adj: &[Vec<usize>],
    edges: &[(usize, usize)],
    frac: &[bool],
    degree: &[usize],
) -> Vec<(usize, f64)> {
    let start = (0..adj.len()).find(|&v| degree[v] >= 2).expect("fractional 2-core");
    let mut pos = vec![usize::MAX; adj.len()];
    let mut walk: Vec<(usize, f64)> = Vec::new();
    let mut verts = vec![start];
    pos[start] = 0;
    let mut v = start;
    let mut came: Option<usize> = None;
    loop {
        let e = *adj[v]
            .iter()
            .find(|&&e| frac[e] && Some(e) != came)
            .expect("degree at least two");
        let (t, h) = edges[e];
        let (w, dir) = if t == v { (h, 1.0) } else { (t, -1.0) };
        walk.push((e, dir));
        if pos[w] != usize::MAX {
            return walk[pos[w]..].to_vec();
        }
        pos[w] = verts.len();
        verts.push(w);
        came = Some(e);
        v = w;
    }
}

/// Conservation, capacity and integrality check of a flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowReport {
    /// Largest `|B^T f - d|` over vertices.
    pub conservation_residual: f64,
    /// Arcs with `f < 0` or `f > u`.
    pub capacity_violations: Vec<usize>,
    pub integral: bool,
    pub cost: f64,
}

impl FlowReport {
    pub fn is_valid(&self) -> bool {
        self.conservation_residual == 0.0 && self.capacity_violations.is_empty() && self.integral
    }
}

pub fn verify_flow(inst: &FlowInstance, f: &[f64]) -> FlowReport {
    let g = &inst.graph;
    let mut net = vec![0.0; g.n()];
    for (e, &(t, h)) in g.edges().iter().enumerate() {
        net[h] += f[e];
        net[t] -= f[e];
    }
    FlowReport {
        conservation_residual: net
            .iter()
            .zip(&inst.demand)
            .map(|(a, &d)| (a - d as f64).abs())
            .fold(0.0, f64::max),
        capacity_violations: (0..g.m())
            .filter(|&e| f[e] < 0.0 || f[e] > inst.capacity[e] as f64)
            .collect(),
        integral: f.iter().all(|v| v.fract() == 0.0),
        cost: f.iter().zip(&inst.cost).map(|(x, &c)| x * c as f64).sum(),
    }
}
