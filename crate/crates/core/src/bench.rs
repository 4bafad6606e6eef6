//! Benchmark sweeps over generated instances and the iteration-count fit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::gen::{self, Decomposed};
use crate::graph::{LpInstance, TreeDecomposition};
use crate::mincost::{self, SolveOutcome};
use crate::ripm::{ripm_solve, IpmSettings, IpmStats};

/// Graph family of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Random `k`-trees; sizes are vertex counts.
    KTree(usize),
    /// Grids with this many rows; sizes are column counts.
    Grid(usize),
}

impl Family {
    pub fn generate(self, size: usize, rng: &mut impl Rng) -> Decomposed {
        match self {
            Family::KTree(k) => gen::ktree(size, k, rng),
            Family::Grid(rows) => gen::grid(rows, size),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub family: Family,
    pub sizes: Vec<usize>,
    pub big_m: i64,
    pub seed: u64,
    pub settings: IpmSettings,
}

/// One solved instance of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub tau: usize,
    pub big_m: i64,
    pub iterations: usize,
    pub restarts: usize,
    pub blocks_refreshed: usize,
    pub wall_secs: f64,
}

impl BenchRow {
    fn new(n: usize, m: usize, tau: usize, big_m: i64, stats: &IpmStats, wall_secs: f64) -> Self {
        Self {
            n,
            m,
            tau,
            big_m,
            iterations: stats.iterations,
            restarts: stats.restarts,
            blocks_refreshed: stats.blocks_refreshed,
            wall_secs,
        }
    }
}

/// Solves one feasible min-cost flow instance per size. Each size draws
/// from its own seeded stream, so rows do not depend on the other sizes.
pub fn run_flow_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(cfg.sizes.len());
    for (i, &size) in cfg.sizes.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
        let g = cfg.family.generate(size, &mut rng);
        let inst = gen::flow_instance(g.n, &g.edges, cfg.big_m, true, &mut rng);
        let start = Instant::now();
        let outcome = mincost::solve(&inst, &g.td, &cfg.settings, &mut ())?;
        let wall = start.elapsed().as_secs_f64();
        let stats = match outcome {
            SolveOutcome::Optimal(sol) => sol.stats,
            SolveOutcome::Infeasible { .. } => {
                return Err(Error::Infeasible(format!("generated instance of size {size} reported infeasible")))
            }
        };
        rows.push(BenchRow::new(inst.graph.n(), inst.graph.m(), g.td.width(), cfg.big_m, &stats, wall));
    }
    Ok(rows)
}

/// LP on a `rows x cols` grid: every edge carries an arc with bounds
/// `[0, 2]` and a cost in `-M..=M`, and the demands are those of the
/// all-ones flow, so the feasible set has interior radius 1.
pub fn grid_lp(rows: usize, cols: usize, big_m: i64, rng: &mut impl Rng) -> (LpInstance, TreeDecomposition) {
    let g = gen::grid(rows, cols);
    let m = g.edges.len();
    let tails: Vec<usize> = g.edges.iter().map(|e| e.0).collect();
    let heads: Vec<usize> = g.edges.iter().map(|e| e.1).collect();
    let mut b = vec![0.0; g.n];
    for (&t, &h) in tails.iter().zip(&heads) {
        b[h] += 1.0;
        b[t] -= 1.0;
    }
    let c: Vec<f64> = (0..m).map(|_| rng.gen_range(-big_m..=big_m) as f64).collect();
    let lp = LpInstance::new(g.n, tails, heads, b, c, vec![0.0; m], vec![2.0; m]).expect("grid LP is well formed");
    (lp, g.td)
}

/// Accuracy used by the LP sweep.
pub const LP_SWEEP_EPS: f64 = 1e-6;

/// Solves [`grid_lp`] for each column count.
pub fn run_lp_sweep(
    rows: usize,
    cols: &[usize],
    big_m: i64,
    seed: u64,
    settings: &IpmSettings,
) -> Result<Vec<BenchRow>> {
    let mut out = Vec::with_capacity(cols.len());
    for (i, &c) in cols.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let (lp, td) = grid_lp(rows, c, big_m, &mut rng);
        let start = Instant::now();
        let res = ripm_solve(&lp, &td, LP_SWEEP_EPS, 1.0, settings, &mut ())?;
        let wall = start.elapsed().as_secs_f64();
        out.push(BenchRow::new(lp.n, lp.m(), td.width(), big_m, &res.stats, wall));
    }
    Ok(out)
}

/// Least-squares slope of `ln(iterations / ln(m M))` against `ln m`: the
/// exponent `p` in `iterations ≈ C m^p log(mM)`. `None` with fewer than two
/// distinct sizes.
pub fn fit_exponent(rows: &[BenchRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.m > 1 && r.iterations > 0)
        .map(|r| {
            let m = r.m as f64;
            let log_mm = (m * r.big_m.max(2) as f64).ln();
            (m.ln(), (r.iterations as f64 / log_mm).ln())
        })
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if pts.len() < 2 || sxx < 1e-12 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

pub const CSV_HEADER: &str = "n,m,tau,big_m,iterations,restarts,blocks_refreshed,wall_ms";

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{:.3}",
            r.n,
            r.m,
            r.tau,
            r.big_m,
            r.iterations,
            r.restarts,
            r.blocks_refreshed,
            r.wall_secs * 1e3
        );
    }
    s
}
