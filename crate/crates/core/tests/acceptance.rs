//! Acceptance suite. Each criterion is one test that prints a single
//! `criterion N: PASS|FAIL ...` line on stderr (uncaptured) and then asserts.

use std::io::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twflow::bench;
use twflow::gen;
use twflow::graph::{
    connected_components, validate_tree_decomposition, weighted_laplacian, DirectedGraph, FlowInstance, LpInstance,
    TreeDecomposition,
};
use twflow::mincost::{self, round_to_integral, verify_flow, SolveOutcome};
use twflow::nested_dissection::{NdFactorization, SchurMode};
use twflow::oracle;
use twflow::ripm::{ripm_solve, IpmSettings, Problem, StepInfo, StepObserver};
use twflow::septree::SeparatorTree;
use twflow::solution::{block_budget, SolutionState};
use twflow::tw_approx::{self, in_node, min_cut_between, out_node, vertex_to_edge_reduction, Dinic, TwSettings};

// criterion 1
const EXACT_SUITE_SIZE: usize = 200;
const EXACT_SUITE_SECONDS: f64 = 300.0;
// criterion 2
const SOLVE_REL_TOL: f64 = 1e-8;
const PROJECTION_REL_TOL: f64 = 1e-7;
// criterion 3
const SEPTREE_HEIGHT_SLACK: f64 = 3.0;
const SEPTREE_BOUNDARY_C: f64 = 4.0;
// criterion 4
const DRIFT_REL_TOL: f64 = 1e-9;
const PAPER_STEP_C: f64 = 1.0;
const PAPER_MAX_STEPS: usize = 4000;
// criterion 5
const BLOCK_BUDGET_C: f64 = 1.0;
const FIT_EXPONENT_RANGE: (f64, f64) = (0.4, 0.6);
const SWEEP_COLUMNS: [usize; 5] = [21, 63, 200, 630, 2000];
const SWEEP_BIG_M: i64 = 10;
// criterion 6
const ROUNDING_CASES: usize = 100;
const ROUNDING_PRE_TOL: f64 = 1e-9;
// criterion 7
const TW_C: f64 = 8.0;
const TW_SECONDS: f64 = 600.0;

fn report(criterion: usize, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {criterion}: {verdict} {detail}");
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(1e-300)
}

/// Sizes skewed towards the small end of `lo..=hi`.
fn skewed(rng: &mut impl Rng, lo: usize, hi: usize) -> usize {
    let u: f64 = rng.gen();
    lo + ((hi - lo) as f64 * u * u).round() as usize
}

#[test]
fn criterion_1_exact_optimum_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let start = Instant::now();
    let (mut feasible, mut infeasible, mut failures) = (0, 0, Vec::new());
    for case in 0..EXACT_SUITE_SIZE {
        let g = if case % 5 == 4 {
            gen::grid(rng.gen_range(2..=15), skewed(&mut rng, 2, 15))
        } else {
            let k = [1, 2, 3, 5][case % 4];
            gen::ktree(skewed(&mut rng, k + 2, 200), k, &mut rng)
        };
        let big_m = rng.gen_range(1..=100);
        let inst = gen::flow_instance(g.n, &g.edges, big_m, rng.gen_bool(0.8), &mut rng);
        let want = oracle::ssp_min_cost_flow(&inst);
        let got = mincost::solve(&inst, &g.td, &IpmSettings::default(), &mut ());
        let ok = match (&got, &want) {
            (Ok(SolveOutcome::Optimal(sol)), oracle::OracleFlow::Optimal { cost, .. }) => {
                let f: Vec<f64> = sol.flow.iter().map(|&x| x as f64).collect();
                feasible += 1;
                verify_flow(&inst, &f).is_valid() && sol.cost == *cost && inst.flow_cost(&sol.flow) == *cost
            }
            (Ok(SolveOutcome::Infeasible { cut, .. }), oracle::OracleFlow::Infeasible { .. }) => {
                infeasible += 1;
                oracle::check_cut_certificate(&inst, cut)
            }
            _ => false,
        };
        if !ok {
            failures.push(format!(
                "case {case} (n={}, m={}, M={big_m}): got {:?}, oracle {:?}",
                g.n,
                inst.graph.m(),
                got.as_ref().map(|o| match o {
                    SolveOutcome::Optimal(s) => Some(s.cost),
                    SolveOutcome::Infeasible { .. } => None,
                }),
                want.cost()
            ));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < EXACT_SUITE_SECONDS;
    report(
        1,
        pass,
        &format!(
            "{} instances ({feasible} feasible, {infeasible} infeasible), {} mismatches, {secs:.1}s (limit {EXACT_SUITE_SECONDS}s)",
            EXACT_SUITE_SIZE,
            failures.len()
        ),
    );
    assert!(pass, "{failures:#?}");
}

/// Random graph on `n <= 30` vertices with a decomposition: a `k`-tree,
/// sometimes split into two components.
fn random_decomposed(rng: &mut impl Rng, n_max: usize) -> gen::Decomposed {
    let n = rng.gen_range(2..=n_max);
    let k = rng.gen_range(1..=4);
    if rng.gen_bool(0.25) && n >= 4 {
        let a = gen::ktree(n / 2, k, rng);
        let b = gen::ktree(n - n / 2, k, rng);
        let shift = a.n;
        let mut edges = a.edges.clone();
        edges.extend(b.edges.iter().map(|&(x, y)| (x + shift, y + shift)));
        let mut bags = a.td.bags.clone();
        let off = bags.len();
        bags.extend(b.td.bags.iter().map(|bag| bag.iter().map(|v| v + shift).collect()));
        let mut tree = a.td.edges.clone();
        tree.extend(b.td.edges.iter().map(|&(x, y)| (x + off, y + off)));
        tree.push((0, off));
        gen::Decomposed {
            n,
            edges,
            td: TreeDecomposition::new(bags, tree),
        }
    } else {
        gen::ktree(n, k, rng)
    }
}

fn oriented(rng: &mut impl Rng, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    edges.iter().map(|&(a, b)| if rng.gen_bool(0.5) { (a, b) } else { (b, a) }).collect()
}

#[test]
fn criterion_2_linear_algebra_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let (mut worst_solve, mut worst_residual, mut worst_proj) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let g = random_decomposed(&mut rng, 30);
        if g.edges.is_empty() {
            continue;
        }
        let arcs = oriented(&mut rng, &g.edges);
        let w: Vec<f64> = arcs.iter().map(|_| 10f64.powf(rng.gen_range(-2.0..2.0))).collect();
        let tree = SeparatorTree::build(g.n, &arcs, &g.td, 4 * g.td.width().max(1)).unwrap();
        let nd = NdFactorization::initialize(tree, &w, SchurMode::Exact).unwrap();
        let l = weighted_laplacian(&DirectedGraph::new(g.n, arcs.clone()).unwrap(), &w).unwrap();
        let dense: Vec<Vec<f64>> = (0..g.n).map(|i| (0..g.n).map(|j| l[(i, j)]).collect()).collect();
        let (comp, count) = connected_components(g.n, &arcs);
        let mut b: Vec<f64> = (0..g.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for c in 0..count {
            let members: Vec<usize> = (0..g.n).filter(|&v| comp[v] == c).collect();
            let mean = members.iter().map(|&v| b[v]).sum::<f64>() / members.len() as f64;
            for v in members {
                b[v] -= mean;
            }
        }
        let x = nd.apply_inverse(&b).unwrap();
        let want = oracle::dense_pinv_solve(&dense, &b);
        worst_solve = worst_solve.max(rel_diff(&x, &want));
        let lx: Vec<f64> = (0..g.n).map(|i| (0..g.n).map(|j| dense[i][j] * x[j]).sum()).collect();
        worst_residual = worst_residual.max(rel_diff(&lx, &b));
        let v: Vec<f64> = arcs.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = nd.project(&v).unwrap();
        let q = oracle::dense_projection(g.n, &arcs, &w, &v);
        let d: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a - b).collect();
        worst_proj = worst_proj.max(norm(&d) / norm(&v));
    }
    let pass = worst_solve <= SOLVE_REL_TOL && worst_residual <= SOLVE_REL_TOL && worst_proj <= PROJECTION_REL_TOL;
    report(
        2,
        pass,
        &format!(
            "solve rel err {worst_solve:.2e}, residual {worst_residual:.2e} (tol {SOLVE_REL_TOL:e}); projection {worst_proj:.2e} (tol {PROJECTION_REL_TOL:e})"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_separator_tree_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let (mut worst_c, mut worst_balance, mut worst_height_gap) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    let mut violations = Vec::new();
    for case in 0..50 {
        let g = match case % 3 {
            0 => gen::ktree(rng.gen_range(3..=150), rng.gen_range(1..=4), &mut rng),
            1 => gen::grid(rng.gen_range(2..=6), rng.gen_range(2..=20)),
            _ => gen::random_tree(rng.gen_range(2..=120), &mut rng),
        };
        let arcs = oriented(&mut rng, &g.edges);
        let tau = g.td.width().max(1);
        let tree = SeparatorTree::build(g.n, &arcs, &g.td, 4 * tau).unwrap();
        if let Err(v) = tree.validate() {
            violations.push(format!("case {case}: {v:?}"));
        }
        let m = arcs.len() as f64;
        let bound = ((g.n as f64) * m).ln() / 1.5f64.ln();
        worst_height_gap = worst_height_gap.max(tree.height as f64 - bound);
        worst_balance = worst_balance.max(tree.worst_balance());
        let log_m = m.max(2.0).ln();
        worst_c = worst_c.max(tree.max_local_size() as f64 / (tau as f64 * log_m * log_m));
    }
    let pass = violations.is_empty()
        && worst_balance <= 2.0 / 3.0 + 1e-12
        && worst_height_gap <= SEPTREE_HEIGHT_SLACK
        && worst_c <= SEPTREE_BOUNDARY_C;
    report(
        3,
        pass,
        &format!(
            "50 graphs, {} violations, worst balance {worst_balance:.3} (limit 2/3), height - log_1.5(nm) = {worst_height_gap:.2} (limit {SEPTREE_HEIGHT_SLACK}), boundary c = {worst_c:.3} (limit {SEPTREE_BOUNDARY_C})",
            violations.len()
        ),
    );
    assert!(pass, "{violations:#?}");
}

/// Checks the per-step contracts of the interior point method.
#[derive(Default)]
struct ContractCheck {
    steps: usize,
    worst_drift: f64,
    worst_f_dev: f64,
    worst_s_dev: f64,
    worst_mirror: f64,
    worst_step_bound: f64,
    worst_block_ratio: f64,
    restart_mismatches: usize,
    interior_violations: usize,
    // independent restart bookkeeping
    k: usize,
    tbar: Option<f64>,
    phase: u8,
}

impl StepObserver for ContractCheck {
    fn on_step(&mut self, info: &StepInfo, state: &SolutionState, problem: &Problem<'_>) {
        self.steps += 1;
        if self.phase != info.phase || info.iteration == 1 {
            self.phase = info.phase;
            self.k = 0;
            self.tbar = Some(info.tbar);
        }
        self.k += 1;
        let tbar = self.tbar.unwrap_or(info.tbar);
        let rule = (tbar - info.t).abs() >= info.alpha * tbar || self.k as f64 > info.restart_stride;
        if rule != info.restarted || (tbar - info.tbar).abs() > 1e-12 * tbar {
            self.restart_mismatches += 1;
        }
        if info.restarted {
            self.k = 0;
            self.tbar = Some(info.t);
        }

        let (f, s) = state.exact();
        if (0..f.len()).any(|e| !problem.barrier.interior(e, f[e])) {
            self.interior_violations += 1;
        }
        let r = problem.bt_mul(&f);
        let d: Vec<f64> = r.iter().zip(problem.b).map(|(a, b)| a - b).collect();
        self.worst_drift = self.worst_drift.max(norm(&d) / norm(problem.b).max(1.0));
        // deviation of the approximations, against the dense mirror when present
        let (rf, rs) = state.mirror().unwrap_or((&f, &s));
        let w = state.weights();
        let (fbar, sbar) = (state.fbar(), state.sbar());
        for e in 0..f.len() {
            let sw = w[e].sqrt();
            self.worst_f_dev = self.worst_f_dev.max((fbar[e] - rf[e]).abs() / sw / info.eps_bar);
            self.worst_s_dev = self.worst_s_dev.max((sbar[e] - rs[e]).abs() * sw / info.eps_bar);
        }
        if let Some((mf, ms)) = state.mirror() {
            self.worst_mirror = self.worst_mirror.max(rel_diff(&f, mf)).max(rel_diff(&s, ms));
        }
        let m = f.len() as f64;
        self.worst_step_bound = self.worst_step_bound.max(info.h.abs() * info.v_norm * m.ln());
        let budget = block_budget(info.k, info.beta, info.eps_bar, f.len());
        self.worst_block_ratio = self.worst_block_ratio.max(info.blocks_refreshed as f64 / budget);
    }
}

fn small_lp() -> (LpInstance, TreeDecomposition) {
    // two parallel arcs 0 -> 1 carrying one unit
    let lp = LpInstance::new(2, vec![0, 0], vec![1, 1], vec![-1.0, 1.0], vec![1.0, 2.0], vec![0.0; 2], vec![2.0; 2])
        .unwrap();
    (lp, TreeDecomposition::new(vec![vec![0, 1]], vec![]))
}

#[test]
fn criterion_4_ipm_contracts() {
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    let mut check = ContractCheck::default();
    let mut solved = 0;
    for case in 0..6 {
        let g = gen::ktree(rng.gen_range(6..=40), 1 + case % 3, &mut rng);
        let inst = gen::flow_instance(g.n, &g.edges, 20, true, &mut rng);
        let settings = IpmSettings {
            dense_mirror: true,
            ..IpmSettings::default()
        };
        if let Ok(SolveOutcome::Optimal(_)) = mincost::solve(&inst, &g.td, &settings, &mut check) {
            solved += 1;
        }
    }
    let practical_ok = check.interior_violations == 0
        && check.worst_drift <= DRIFT_REL_TOL
        && check.worst_f_dev <= 1.0
        && check.worst_s_dev <= 1.0
        && solved == 6;

    let (lp, td) = small_lp();
    let mut paper = ContractCheck::default();
    let settings = IpmSettings {
        max_iterations: PAPER_MAX_STEPS,
        dense_mirror: true,
        ..IpmSettings::paper()
    };
    let res = ripm_solve(&lp, &td, 0.1, 0.5, &settings, &mut paper);
    let paper_ok = res.is_ok()
        && paper.steps > 0
        && paper.interior_violations == 0
        && paper.worst_drift <= DRIFT_REL_TOL
        && paper.worst_step_bound <= PAPER_STEP_C
        && paper.worst_f_dev <= 1.0
        && paper.worst_s_dev <= 1.0;
    let pass = practical_ok && paper_ok;
    report(
        4,
        pass,
        &format!(
            "practical: {} steps, drift {:.1e}, dev vs mirror f {:.3} s {:.3} (units of eps_bar), implicit/mirror rel gap {:.1e}, interior violations {}; paper (m=6, {} capped steps): |h||v|ln m <= {:.2e} (limit {PAPER_STEP_C}), drift {:.1e}",
            check.steps,
            check.worst_drift,
            check.worst_f_dev,
            check.worst_s_dev,
            check.worst_mirror,
            check.interior_violations,
            paper.steps,
            paper.worst_step_bound,
            paper.worst_drift
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_accounting_and_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5005);
    let mut check = ContractCheck::default();
    for case in 0..4 {
        let g = if case % 2 == 0 {
            gen::ktree(rng.gen_range(20..=80), 2, &mut rng)
        } else {
            gen::grid(3, rng.gen_range(5..=20))
        };
        let inst = gen::flow_instance(g.n, &g.edges, 30, true, &mut rng);
        mincost::solve(&inst, &g.td, &IpmSettings::default(), &mut check).unwrap();
    }
    let rows = bench::run_lp_sweep(3, &SWEEP_COLUMNS, SWEEP_BIG_M, 55, &IpmSettings::default()).unwrap();
    let p = bench::fit_exponent(&rows).unwrap_or(f64::NAN);
    let c = rows
        .iter()
        .map(|r| r.iterations as f64 / ((r.m as f64).sqrt() * (r.m as f64 * r.big_m as f64).ln()))
        .fold(0.0, f64::max);
    let pass = check.worst_block_ratio <= BLOCK_BUDGET_C
        && check.restart_mismatches == 0
        && (FIT_EXPONENT_RANGE.0..=FIT_EXPONENT_RANGE.1).contains(&p);
    let sizes: Vec<String> = rows.iter().map(|r| format!("{}:{}", r.m, r.iterations)).collect();
    report(
        5,
        pass,
        &format!(
            "blocks/N_k <= {:.3} (limit {BLOCK_BUDGET_C}), restart rule mismatches {} over {} steps, sweep m:iterations [{}], exponent {p:.3} in [{}, {}], C = {c:.2}",
            check.worst_block_ratio,
            check.restart_mismatches,
            check.steps,
            sizes.join(" "),
            FIT_EXPONENT_RANGE.0,
            FIT_EXPONENT_RANGE.1
        ),
    );
    assert!(pass);
}

/// Integral flow `x0` plus fractional multiples of fundamental cycles of a
/// BFS tree, clamped to the capacity box.
fn fractional_circulation(rng: &mut impl Rng) -> (FlowInstance, Vec<f64>) {
    let g = gen::ktree(rng.gen_range(4..=40), rng.gen_range(1..=3), rng);
    let mut arcs = oriented(rng, &g.edges);
    for _ in 0..rng.gen_range(0..4) {
        let e = arcs[rng.gen_range(0..arcs.len())];
        arcs.push(e);
    }
    let m = arcs.len();
    let cap: Vec<i64> = (0..m).map(|_| rng.gen_range(1..=20)).collect();
    let cost: Vec<i64> = (0..m).map(|_| rng.gen_range(-10..=20)).collect();
    let x0: Vec<i64> = cap.iter().map(|&u| rng.gen_range(0..=u)).collect();
    let mut demand = vec![0i64; g.n];
    for (e, &(t, h)) in arcs.iter().enumerate() {
        demand[h] += x0[e];
        demand[t] -= x0[e];
    }
    let inst = FlowInstance::new(DirectedGraph::new(g.n, arcs.clone()).unwrap(), demand, cap.clone(), cost).unwrap();
    // BFS tree: parent arc of each vertex
    let mut adj = vec![Vec::new(); g.n];
    for (e, &(t, h)) in arcs.iter().enumerate() {
        adj[t].push((h, e));
        adj[h].push((t, e));
    }
    let mut parent: Vec<Option<usize>> = vec![None; g.n];
    let mut depth = vec![usize::MAX; g.n];
    depth[0] = 0;
    let mut queue = std::collections::VecDeque::from([0]);
    let mut in_tree = vec![false; m];
    while let Some(v) = queue.pop_front() {
        for &(w, e) in &adj[v] {
            if depth[w] == usize::MAX {
                depth[w] = depth[v] + 1;
                parent[w] = Some(e);
                in_tree[e] = true;
                queue.push_back(w);
            }
        }
    }
    let mut f: Vec<f64> = x0.iter().map(|&x| x as f64).collect();
    let mut non_tree: Vec<usize> = (0..m).filter(|&e| !in_tree[e]).collect();
    non_tree.shuffle(rng);
    for &e in &non_tree {
        // cycle: e forward, then the tree path from head(e) back to tail(e)
        let (t, h) = arcs[e];
        let mut cycle = vec![(e, 1.0)];
        let (mut a, mut b) = (h, t);
        let mut tail_part = Vec::new();
        while a != b {
            if depth[a] >= depth[b] {
                let pe = parent[a].unwrap();
                let up = arcs[pe].0 == a; // arc points away from a, towards its parent side
                let other = if up { arcs[pe].1 } else { arcs[pe].0 };
                cycle.push((pe, if arcs[pe].0 == a { 1.0 } else { -1.0 }));
                a = other;
            } else {
                let pe = parent[b].unwrap();
                let other = if arcs[pe].0 == b { arcs[pe].1 } else { arcs[pe].0 };
                tail_part.push((pe, if arcs[pe].1 == b { 1.0 } else { -1.0 }));
                b = other;
            }
        }
        cycle.extend(tail_part.into_iter().rev());
        let room = cycle
            .iter()
            .map(|&(a, sign)| if sign > 0.0 { cap[a] as f64 - f[a] } else { f[a] })
            .fold(f64::INFINITY, f64::min);
        if room > 1e-6 {
            let delta = room * rng.gen_range(0.05..0.95);
            for (a, sign) in cycle {
                f[a] += sign * delta;
            }
        }
    }
    (inst, f)
}

#[test]
fn criterion_6_rounding() {
    let mut rng = ChaCha8Rng::seed_from_u64(6006);
    let (mut fractional_inputs, mut failures) = (0, Vec::new());
    for case in 0..ROUNDING_CASES {
        let (inst, f) = fractional_circulation(&mut rng);
        let pre = verify_flow(&inst, &f);
        assert!(pre.conservation_residual <= ROUNDING_PRE_TOL && pre.capacity_violations.is_empty());
        if !pre.integral {
            fractional_inputs += 1;
        }
        match round_to_integral(&inst, &f) {
            Ok(x) => {
                let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
                let post = verify_flow(&inst, &xf);
                let cost_ok = inst.flow_cost(&x) as f64 <= pre.cost + ROUNDING_PRE_TOL * pre.cost.abs().max(1.0);
                if !post.is_valid() || !cost_ok {
                    failures.push(format!("case {case}: {post:?}, cost {} vs {}", inst.flow_cost(&x), pre.cost));
                }
            }
            Err(e) => failures.push(format!("case {case}: {e}")),
        }
    }
    let pass = failures.is_empty() && fractional_inputs >= ROUNDING_CASES / 2;
    report(
        6,
        pass,
        &format!(
            "{ROUNDING_CASES} circulations ({fractional_inputs} fractional), {} failures; exact integer conservation, cost not increased",
            failures.len()
        ),
    );
    assert!(pass, "{failures:#?}");
}

/// All graphs on `n` vertices when `n <= 5`, else random ones.
fn small_graphs(n: usize, rng: &mut impl Rng) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    if n <= 5 {
        (0u32..1 << pairs.len())
            .map(|mask| pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect())
            .collect()
    } else {
        (0..40)
            .map(|_| {
                let p = rng.gen_range(0.15..0.6);
                pairs.iter().copied().filter(|_| rng.gen_bool(p)).collect()
            })
            .collect()
    }
}

#[test]
fn criterion_7_treewidth_approximation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7007);
    let start = Instant::now();
    let mut worst_ratio = 0.0f64;
    let mut invalid = 0;
    let mut cases: Vec<(gen::Decomposed, usize)> = Vec::new();
    for n in [10, 50, 150, 300] {
        cases.push((gen::random_tree(n, &mut rng), 1));
        cases.push((gen::path(n), 1));
        cases.push((gen::grid(3, n / 3), 3));
        for k in 1..=3 {
            cases.push((gen::ktree(n, k, &mut rng), k));
        }
    }
    for (i, (g, tw)) in cases.iter().enumerate() {
        let settings = TwSettings {
            seed: i as u64,
            ..TwSettings::default()
        };
        let td = tw_approx::build_tree_decomposition(g.n, &g.edges, &mut Dinic, &settings).unwrap();
        if validate_tree_decomposition(g.n, &g.edges, &td).is_err() {
            invalid += 1;
        }
        let ratio = td.width() as f64 / (*tw as f64 * (g.n as f64).log2());
        worst_ratio = worst_ratio.max(ratio);
    }

    // reduction soundness: min vertex cut between A and B equals the min
    // cut in the split graph from the in-copies of A to the out-copies of B
    let mut checked = 0;
    let mut mismatches = 0;
    for n in 2..=10 {
        for edges in small_graphs(n, &mut rng) {
            let inst = vertex_to_edge_reduction(n, &edges, tw_approx::DEFAULT_BALANCE);
            for _ in 0..2 {
                let mut verts: Vec<usize> = (0..n).collect();
                verts.shuffle(&mut rng);
                let ka = rng.gen_range(1..=n.div_ceil(3));
                let kb = rng.gen_range(1..=(n - ka).clamp(1, n.div_ceil(3)));
                let (a, b) = (&verts[..ka], &verts[ka..ka + kb]);
                let want = oracle::min_vertex_cut_enumerate(n, &edges, a, b);
                let sources: Vec<usize> = a.iter().map(|&v| in_node(v)).collect();
                let sinks: Vec<usize> = b.iter().map(|&v| out_node(n, v)).collect();
                let (got, _) = min_cut_between(&inst, &mut Dinic, &sources, &sinks).unwrap();
                checked += 1;
                if got as usize != want {
                    mismatches += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = invalid == 0 && worst_ratio <= TW_C && mismatches == 0 && secs < TW_SECONDS;
    report(
        7,
        pass,
        &format!(
            "{} graphs, {invalid} invalid, worst width/(tw log2 n) = {worst_ratio:.3} (C limit {TW_C}); reduction: {mismatches} mismatches over {checked} terminal pairs; {secs:.1}s",
            cases.len()
        ),
    );
    assert!(pass);
}
