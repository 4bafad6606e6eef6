//! Robust interior point method for `min c^T f` subject to `B^T f = b`,
//! `l <= f <= u`.
//!
//! The centering loop follows the central path of the log barrier with a
//! cosh potential on the centrality `γ`, keeps `(f, s)` implicitly in a
//! [`SolutionState`], and restarts the state from the exact iterate whenever
//! the path parameter drifts or a lifetime of steps has elapsed. The full
//! solve runs two centering phases: one on a modified program with an
//! explicit starting point, one on the original program.

use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::{norm2, LpInstance, TreeDecomposition};
use crate::nested_dissection::{NdFactorization, SchurMode};
use crate::septree::SeparatorTree;
use crate::solution::{MaintainConfig, SolutionState};

/// `λγ` is clamped here before cosh and sinh are evaluated.
pub const LAMBDA_GAMMA_CLAMP: f64 = 500.0;
/// Relative increase of the potential tolerated before a step is halved.
pub const POTENTIAL_TOL: f64 = 1e-6;
/// Practical-mode defaults: `λ`, the product `αλ`, and the ratio `κ` of the
/// path-parameter rate to the centering step.
pub const PRACTICAL_LAMBDA: f64 = 1.0;
pub const PRACTICAL_ALPHA_LAMBDA: f64 = 1.0;
pub const PRACTICAL_T_RATE: f64 = 1.0;
/// Practical-mode approximation accuracy as a fraction of `α`.
pub const PRACTICAL_EPS_BAR_ALPHA: f64 = 0.1;
/// Practical-mode `λγ` above which a step only recenters.
pub const PRACTICAL_HOLD_LAMBDA_GAMMA: f64 = 1.0;
/// Practical-mode relative change of a weight below which the factorization
/// keeps the old value.
pub const PRACTICAL_WEIGHT_SLACK: f64 = 0.1;

/// Log barrier `-log(u - x) - log(x - l)`, or `-log(x - l)` when `u = +inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct Barrier {
    pub l: Vec<f64>,
    pub u: Vec<f64>,
}

impl Barrier {
    pub fn new(l: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if l.len() != u.len() {
            return Err(Error::Dimension("barrier bounds disagree in length".into()));
        }
        if let Some(i) = (0..l.len()).position(|i| !(l[i] < u[i]) || !l[i].is_finite()) {
            return Err(Error::Dimension(format!("barrier coordinate {i} has empty domain")));
        }
        Ok(Self { l, u })
    }

    pub fn len(&self) -> usize {
        self.l.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l.is_empty()
    }

    pub fn interior(&self, i: usize, x: f64) -> bool {
        x > self.l[i] && x < self.u[i]
    }

    pub fn value(&self, i: usize, x: f64) -> f64 {
        let lo = -(x - self.l[i]).ln();
        if self.u[i].is_finite() {
            lo - (self.u[i] - x).ln()
        } else {
            lo
        }
    }

    pub fn grad(&self, i: usize, x: f64) -> f64 {
        let lo = -1.0 / (x - self.l[i]);
        if self.u[i].is_finite() {
            lo + 1.0 / (self.u[i] - x)
        } else {
            lo
        }
    }

    pub fn hess(&self, i: usize, x: f64) -> f64 {
        let a = x - self.l[i];
        let lo = 1.0 / (a * a);
        if self.u[i].is_finite() {
            let b = self.u[i] - x;
            lo + 1.0 / (b * b)
        } else {
            lo
        }
    }

    /// `W = ∇²φ(x)^{-1}` for coordinate `i`.
    pub fn weight(&self, i: usize, x: f64) -> f64 {
        1.0 / self.hess(i, x)
    }

    /// First coordinate outside the open domain, as a diagnostic error.
    pub fn check(&self, f: &[f64], step: usize) -> Result<()> {
        match (0..f.len()).find(|&i| !self.interior(i, f[i])) {
            None => Ok(()),
            Some(i) => Err(Error::BoundaryContact {
                coord: i,
                step,
                value: f[i],
                lower: self.l[i],
                upper: self.u[i],
            }),
        }
    }

    /// `argmin_x a x + φ_i(x)` by safeguarded Newton on the derivative.
    pub fn minimize_linear(&self, i: usize, a: f64) -> Result<f64> {
        let (l, u) = (self.l[i], self.u[i]);
        if !u.is_finite() {
            if a <= 0.0 {
                return Err(Error::Infeasible(format!(
                    "coordinate {i} is unbounded in the barrier problem"
                )));
            }
            return Ok(l + 1.0 / a);
        }
        // offset d from the bound the minimizer leans toward; root in (0, D/2]
        let span = u - l;
        let a_abs = a.abs();
        let q = |d: f64| 1.0 / d - 1.0 / (span - d) - a_abs;
        let dq = |d: f64| -1.0 / (d * d) - 1.0 / ((span - d) * (span - d));
        let (mut lo, mut hi) = (0.0, 0.5 * span);
        let mut d = if a_abs == 0.0 {
            hi
        } else {
            (1.0 / a_abs).min(hi)
        };
        for _ in 0..200 {
            let val = q(d);
            if val == 0.0 {
                break;
            }
            if val > 0.0 {
                lo = d;
            } else {
                hi = d;
            }
            let newton = d - val / dq(d);
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let done = (next - d).abs() <= 1e-14 * d || hi - lo <= 1e-15 * hi;
            d = next;
            if done {
                break;
            }
        }
        Ok(if a >= 0.0 { l + d } else { u - d })
    }
}

/// `μ_i = s_i/t + φ_i'(f_i)` and `γ_i = |μ_i| / sqrt(φ_i''(f_i))`.
pub fn centrality(f: &[f64], s: &[f64], t: f64, barrier: &Barrier) -> Result<(Vec<f64>, Vec<f64>)> {
    barrier.check(f, 0)?;
    let mu: Vec<f64> = (0..f.len()).map(|i| s[i] / t + barrier.grad(i, f[i])).collect();
    let gamma = (0..f.len())
        .map(|i| mu[i].abs() * barrier.weight(i, f[i]).sqrt())
        .collect();
    Ok((mu, gamma))
}

/// `ln cosh(x)` without overflow.
pub fn log_cosh(x: f64) -> f64 {
    let x = x.abs();
    x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2
}

/// Below this `λγ` the cosh norm is summed directly without overflow.
const DIRECT_COSH_LIMIT: f64 = 300.0;

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + xs.map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// `ln ‖cosh(λγ)‖₂` with `λγ` clamped.
pub fn log_cosh_norm(gamma: &[f64], lambda: f64) -> f64 {
    let top = gamma.iter().fold(0.0f64, |a, &g| a.max(lambda * g));
    if top <= DIRECT_COSH_LIMIT {
        let sum: f64 = gamma
            .iter()
            .map(|&g| {
                let e = (lambda * g).exp();
                let c = 0.5 * (e + 1.0 / e);
                c * c
            })
            .sum();
        return 0.5 * sum.ln();
    }
    0.5 * log_sum_exp(
        gamma
            .iter()
            .map(|g| 2.0 * log_cosh((lambda * g).min(LAMBDA_GAMMA_CLAMP))),
    )
}

/// `v_i = sinh(λγ_i) sign(μ_i)`.
pub fn direction(mu: f64, gamma: f64, lambda: f64) -> f64 {
    let x = (lambda * gamma).min(LAMBDA_GAMMA_CLAMP);
    if mu == 0.0 {
        0.0
    } else {
        x.sinh().copysign(mu)
    }
}

/// `h = -α / ‖cosh(λγ)‖₂` and the direction `v`.
pub fn step_scalars(mu: &[f64], gamma: &[f64], lambda: f64, alpha: f64) -> (f64, Vec<f64>) {
    let h = -alpha * (-log_cosh_norm(gamma, lambda)).exp();
    let v = mu
        .iter()
        .zip(gamma)
        .map(|(&m, &g)| direction(m, g, lambda))
        .collect();
    (h, v)
}

/// Duality gap of `(f, s)` with the dual slack split between the bounds by
/// sign.
pub fn duality_gap(f: &[f64], s: &[f64], barrier: &Barrier) -> f64 {
    (0..f.len())
        .map(|i| {
            if s[i] >= 0.0 {
                s[i] * (f[i] - barrier.l[i])
            } else if barrier.u[i].is_finite() {
                -s[i] * (barrier.u[i] - f[i])
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// The constants of the analysis, verbatim.
    Paper,
    /// Larger steps guarded by a potential check.
    Practical,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Mode::Paper),
            "practical" => Ok(Mode::Practical),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

/// User-facing knobs; unset values take mode defaults for each program size.
#[derive(Debug, Clone, PartialEq)]
pub struct IpmSettings {
    pub mode: Mode,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub eps_bar: Option<f64>,
    pub eps_p_factor: f64,
    /// Path parameter shrinks by `1 - κ α / sqrt(m)` per step.
    pub t_rate: Option<f64>,
    pub restart_stride: Option<f64>,
    pub sparsify: bool,
    pub seed: u64,
    pub dense_mirror: bool,
    pub max_iterations: usize,
}

impl Default for IpmSettings {
    fn default() -> Self {
        Self {
            mode: Mode::Practical,
            alpha: None,
            lambda: None,
            eps_bar: None,
            eps_p_factor: 1.0,
            t_rate: None,
            restart_stride: None,
            sparsify: false,
            seed: 0,
            dense_mirror: false,
            max_iterations: 5_000_000,
        }
    }
}

impl IpmSettings {
    pub fn paper() -> Self {
        Self {
            mode: Mode::Paper,
            ..Self::default()
        }
    }

    /// Resolves the constants for a program with `m` rows and tree width `tau`.
    pub fn resolve(&self, m: usize, tau: usize) -> IpmConfig {
        let mf = m.max(2) as f64;
        let (lambda, alpha, beta, t_rate) = match self.mode {
            Mode::Paper => {
                let lambda = self.lambda.unwrap_or(64.0 * (256.0 * mf * mf).ln());
                let alpha = self.alpha.unwrap_or(1.0 / (2f64.powi(20) * lambda));
                (lambda, alpha, 1.0 / mf.max(3.0).ln(), self.t_rate.unwrap_or(1.0))
            }
            Mode::Practical => {
                let lambda = self.lambda.unwrap_or(PRACTICAL_LAMBDA);
                let alpha = self.alpha.unwrap_or(PRACTICAL_ALPHA_LAMBDA / lambda);
                (lambda, alpha, alpha, self.t_rate.unwrap_or(PRACTICAL_T_RATE))
            }
        };
        let eps_bar = self.eps_bar.unwrap_or(match self.mode {
            Mode::Paper => alpha,
            Mode::Practical => PRACTICAL_EPS_BAR_ALPHA * alpha,
        });
        let eps_p = self.eps_p_factor * alpha / mf.max(3.0).ln();
        let schur = if self.sparsify {
            SchurMode::Sparsified {
                eps: eps_p,
                c: 1.0,
                seed: self.seed,
            }
        } else {
            SchurMode::Exact
        };
        IpmConfig {
            mode: self.mode,
            lambda,
            alpha,
            t_rate,
            beta: beta.max(alpha),
            eps_bar,
            eps_p,
            schur,
            restart_stride: self
                .restart_stride
                .unwrap_or_else(|| (mf / tau.max(1) as f64).sqrt()),
            safeguard: self.mode == Mode::Practical,
            max_retractions: 8,
            hold_gamma: match self.mode {
                Mode::Paper => 0.0,
                Mode::Practical => PRACTICAL_HOLD_LAMBDA_GAMMA / lambda,
            },
            weight_slack: match self.mode {
                Mode::Paper => 0.0,
                Mode::Practical => PRACTICAL_WEIGHT_SLACK,
            },
            dense_mirror: self.dense_mirror,
            max_iterations: self.max_iterations,
        }
    }
}

/// Constants of one centering run.
#[derive(Debug, Clone, PartialEq)]
pub struct IpmConfig {
    pub mode: Mode,
    pub lambda: f64,
    pub alpha: f64,
    pub t_rate: f64,
    /// Bound on `|h| ‖v‖₂` enforced by the solution state.
    pub beta: f64,
    pub eps_bar: f64,
    pub eps_p: f64,
    pub schur: SchurMode,
    /// A restart happens once the step counter exceeds this value.
    pub restart_stride: f64,
    pub safeguard: bool,
    pub max_retractions: usize,
    /// Steps with approximate centrality above this keep `t` fixed; zero
    /// disables the hold.
    pub hold_gamma: f64,
    /// Relative weight change tolerated before a coordinate is reweighted.
    pub weight_slack: f64,
    pub dense_mirror: bool,
    pub max_iterations: usize,
}

impl IpmConfig {
    fn maintain(&self) -> MaintainConfig {
        MaintainConfig {
            eps_bar: self.eps_bar,
            beta: self.beta,
            schur: self.schur,
            dense_mirror: self.dense_mirror,
        }
    }
}

/// `2^21 m^5 · LR/128 · R/r`.
pub fn t_start(m: usize, l_norm: f64, r_norm: f64, r: f64) -> f64 {
    2f64.powi(21) * (m as f64).powi(5) * l_norm * r_norm / 128.0 * r_norm / r
}

/// Margin of [`t_start_practical`] over the smallest useful start.
pub const PRACTICAL_T_START_MARGIN: f64 = 16.0;

/// A smaller start that still leaves the auxiliary blocks of the modified
/// program below `r / (16 λ)` at the end of the first phase. Larger starts
/// put the auxiliary slacks so far above the original costs that rounding
/// in the shared dual swamps them.
pub fn t_start_practical(l_norm: f64, r_norm: f64, r: f64, lambda: f64) -> f64 {
    PRACTICAL_T_START_MARGIN * lambda * 3.0 * l_norm * r_norm * r_norm / r
}

/// What the observer sees after each step.
#[derive(Debug, Clone)]
pub struct StepInfo {
    pub phase: u8,
    /// Steps since the start of this centering run.
    pub iteration: usize,
    /// Steps since the last restart, including this one.
    pub k: usize,
    pub t: f64,
    /// `t̄` in effect during this step.
    pub tbar: f64,
    pub h: f64,
    pub v_norm: f64,
    pub gamma_max: f64,
    pub log_potential: f64,
    pub retractions: usize,
    pub restarted: bool,
    pub blocks_refreshed: usize,
    pub nodes_touched: usize,
    pub alpha: f64,
    pub beta: f64,
    pub eps_bar: f64,
    pub restart_stride: f64,
}

/// Hook called after every step, before a possible restart. `state` holds
/// the post-step implicit pair.
pub trait StepObserver {
    fn on_step(&mut self, _info: &StepInfo, _state: &SolutionState, _problem: &Problem<'_>) {}
}

impl StepObserver for () {}

/// Iteration log with columns `k, t, gamma_inf, gap, blocks_refreshed,
/// nodes_touched`.
pub struct CsvLog<W: Write> {
    out: W,
    rows: usize,
    pub error: Option<std::io::Error>,
}

impl<W: Write> CsvLog<W> {
    pub fn new(out: W) -> Self {
        Self {
            out,
            rows: 0,
            error: None,
        }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> StepObserver for CsvLog<W> {
    fn on_step(&mut self, info: &StepInfo, state: &SolutionState, problem: &Problem<'_>) {
        if self.error.is_some() {
            return;
        }
        let (f, s) = state.exact();
        let s: Vec<f64> = s.iter().map(|x| x * info.tbar).collect();
        let gap = duality_gap(&f, &s, problem.barrier);
        let res = (|| {
            if self.rows == 0 {
                writeln!(self.out, "k,t,gamma_inf,gap,blocks_refreshed,nodes_touched")?;
            }
            writeln!(
                self.out,
                "{},{:e},{:e},{:e},{},{}",
                self.rows, info.t, info.gamma_max, gap, info.blocks_refreshed, info.nodes_touched
            )
        })();
        self.rows += 1;
        if let Err(e) = res {
            self.error = Some(e);
        }
    }
}

/// The constraint system of one centering run. The tree carries `n`, the
/// rows of `B`, and the factorization layout.
pub struct Problem<'a> {
    pub tree: &'a SeparatorTree,
    pub b: &'a [f64],
    pub barrier: &'a Barrier,
}

impl Problem<'_> {
    pub fn bt_mul(&self, f: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.tree.n];
        for (&(t, h), &x) in self.tree.edges.iter().zip(f) {
            y[h] += x;
            y[t] -= x;
        }
        y
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CenteringStats {
    pub iterations: usize,
    pub restarts: usize,
    pub retractions: usize,
    pub blocks_refreshed: usize,
    pub nodes_touched: usize,
    pub max_gamma_end: f64,
}

struct Local {
    mu: Vec<f64>,
    gamma: Vec<f64>,
    w: Vec<f64>,
    v: Vec<f64>,
}

fn local_quantities(barrier: &Barrier, f: &[f64], s_scaled: &[f64], lambda: f64) -> Local {
    let m = f.len();
    let mut out = Local {
        mu: vec![0.0; m],
        gamma: vec![0.0; m],
        w: vec![0.0; m],
        v: vec![0.0; m],
    };
    for i in 0..m {
        let w = barrier.weight(i, f[i]);
        let mu = s_scaled[i] + barrier.grad(i, f[i]);
        out.w[i] = w;
        out.mu[i] = mu;
        out.gamma[i] = mu.abs() * w.sqrt();
        out.v[i] = direction(mu, out.gamma[i], lambda);
    }
    out
}

fn log_potential(barrier: &Barrier, f: &[f64], s_scaled: &[f64], lambda: f64) -> f64 {
    let gamma: Vec<f64> = (0..f.len())
        .map(|i| (s_scaled[i] + barrier.grad(i, f[i])).abs() * barrier.weight(i, f[i]).sqrt())
        .collect();
    let top = gamma.iter().fold(0.0f64, |a, &g| a.max(lambda * g));
    if top <= DIRECT_COSH_LIMIT {
        let sum: f64 = gamma
            .iter()
            .map(|&g| {
                let e = (lambda * g).exp();
                0.5 * (e + 1.0 / e)
            })
            .sum();
        return sum.ln();
    }
    log_sum_exp(gamma.iter().map(|&g| log_cosh((lambda * g).min(LAMBDA_GAMMA_CLAMP))))
}

/// `f + W B L^{-1} (b - B^T f)`, kept only if it stays interior.
fn correct_feasibility(problem: &Problem<'_>, nd: &NdFactorization, f: &mut [f64]) {
    let r: Vec<f64> = problem
        .bt_mul(f)
        .iter()
        .zip(problem.b)
        .map(|(a, b)| b - a)
        .collect();
    if norm2(&r) == 0.0 {
        return;
    }
    let Ok(x) = nd.apply_inverse_projected(&r) else {
        return;
    };
    let w = nd.weights();
    let next: Vec<f64> = problem
        .tree
        .edges
        .iter()
        .enumerate()
        .map(|(e, &(t, h))| f[e] + w[e] * (x[h] - x[t]))
        .collect();
    if (0..f.len()).all(|i| problem.barrier.interior(i, next[i])) {
        f.copy_from_slice(&next);
    }
}

/// Follows the central path from `t_start` down to `t_end` starting at the
/// interior pair `(f, s)`. Returns the final pair.
pub fn centering_impl(
    problem: &Problem<'_>,
    f: &[f64],
    s: &[f64],
    t_start: f64,
    t_end: f64,
    cfg: &IpmConfig,
    phase: u8,
    observer: &mut dyn StepObserver,
) -> Result<(Vec<f64>, Vec<f64>, CenteringStats)> {
    let m = f.len();
    let barrier = problem.barrier;
    if s.len() != m || barrier.len() != m || problem.tree.m() != m {
        return Err(Error::Dimension("centering vectors disagree in length".into()));
    }
    barrier.check(f, 0)?;
    let mut stats = CenteringStats::default();
    if !(t_start > t_end) || m == 0 {
        return Ok((f.to_vec(), s.to_vec(), stats));
    }
    let sqrt_m = (m as f64).sqrt();
    let lambda = cfg.lambda;
    let final_steps = (cfg.restart_stride.floor() as usize).max(1);

    let mut t = t_start;
    let mut tbar = t;
    let s_scaled: Vec<f64> = s.iter().map(|x| x / tbar).collect();
    let mut loc = local_quantities(barrier, f, &s_scaled, lambda);
    let mut state = SolutionState::initialize(
        problem.tree,
        f,
        &s_scaled,
        &loc.v,
        &loc.w,
        cfg.maintain(),
    )?;
    let mut log_phi = log_potential(barrier, f, &s_scaled, lambda);
    let mut k = 0usize;
    let mut settle = 0usize;
    let mut pending_w: Vec<(usize, f64)> = Vec::new();
    let mut pending_v: Vec<(usize, f64)> = Vec::new();

    loop {
        if t <= t_end && settle >= final_steps {
            break;
        }
        if stats.iterations >= cfg.max_iterations {
            log::warn!("centering stopped at the iteration cap with t = {t:e}");
            break;
        }
        let at_end = tbar <= t_end;
        let gamma_max = loc.gamma.iter().fold(0.0f64, |a, &g| a.max(g));
        if !(cfg.hold_gamma > 0.0 && gamma_max > cfg.hold_gamma) {
            t = ((1.0 - cfg.t_rate * cfg.alpha / sqrt_m) * t).max(t_end);
        }
        k += 1;
        stats.iterations += 1;

        let h = -cfg.alpha * (-log_cosh_norm(&loc.gamma, lambda)).exp();
        state.reweight(&pending_w)?;
        state.move_step(h, &pending_v)?;
        pending_w.clear();
        pending_v.clear();

        let mut retractions = 0;
        let mut h_net = h;
        let (mut f_now, mut s_now) = state.exact();
        let mut interior = (0..m).all(|i| barrier.interior(i, f_now[i]));
        let mut phi_now = if interior {
            log_potential(barrier, &f_now, &s_now, lambda)
        } else {
            f64::INFINITY
        };
        if cfg.safeguard {
            while (!interior || phi_now > log_phi + POTENTIAL_TOL)
                && retractions < cfg.max_retractions
            {
                state.move_step(-0.5 * h_net, &[])?;
                h_net *= 0.5;
                retractions += 1;
                (f_now, s_now) = state.exact();
                interior = (0..m).all(|i| barrier.interior(i, f_now[i]));
                phi_now = if interior {
                    log_potential(barrier, &f_now, &s_now, lambda)
                } else {
                    f64::INFINITY
                };
            }
        }
        if !interior {
            return Err(match barrier.check(&f_now, stats.iterations) {
                Err(e) => e,
                Ok(()) => Error::Infeasible("lost interiority".into()),
            });
        }
        log_phi = phi_now;
        stats.retractions += retractions;

        let changed = state.approximate_from(&f_now, &s_now)?;
        let fbar = state.fbar();
        let sbar = state.sbar();
        for &e in &changed {
            let w = barrier.weight(e, fbar[e]);
            let mu = sbar[e] + barrier.grad(e, fbar[e]);
            let g = mu.abs() * w.sqrt();
            let v = direction(mu, g, lambda);
            loc.mu[e] = mu;
            loc.gamma[e] = g;
            if (w / loc.w[e] - 1.0).abs() > cfg.weight_slack {
                loc.w[e] = w;
                pending_w.push((e, w));
            }
            if v != loc.v[e] {
                loc.v[e] = v;
                pending_v.push((e, v));
            }
        }
        stats.blocks_refreshed += state.stats.last_blocks_refreshed;
        stats.nodes_touched += state.stats.last_nodes_touched;

        let restart = (tbar - t).abs() >= cfg.alpha * tbar || k as f64 > cfg.restart_stride;
        if at_end {
            settle += 1;
        }
        let info = StepInfo {
            phase,
            iteration: stats.iterations,
            k,
            t,
            tbar,
            h: h_net,
            v_norm: norm2(state.direction()),
            gamma_max: loc.gamma.iter().fold(0.0, |a: f64, &g| a.max(g)),
            log_potential: log_phi,
            retractions,
            restarted: restart,
            blocks_refreshed: state.stats.last_blocks_refreshed,
            nodes_touched: state.stats.last_nodes_touched,
            alpha: cfg.alpha,
            beta: cfg.beta,
            eps_bar: cfg.eps_bar,
            restart_stride: cfg.restart_stride,
        };
        observer.on_step(&info, &state, problem);

        if restart {
            let (mut f_new, s_new) = state.exact();
            let s_abs: Vec<f64> = s_new.iter().map(|x| x * tbar).collect();
            let nd = state.into_factorization();
            correct_feasibility(problem, &nd, &mut f_new);
            tbar = t;
            k = 0;
            stats.restarts += 1;
            let s_scaled: Vec<f64> = s_abs.iter().map(|x| x / tbar).collect();
            loc = local_quantities(barrier, &f_new, &s_scaled, lambda);
            let mut nd = nd;
            let changes: Vec<(usize, f64)> = (0..m)
                .filter(|&e| nd.weights()[e] != loc.w[e])
                .map(|e| (e, loc.w[e]))
                .collect();
            nd.reweight(&changes)?;
            state = SolutionState::from_factorization(nd, &f_new, &s_scaled, &loc.v, cfg.maintain())?;
            log_phi = log_potential(barrier, &f_new, &s_scaled, lambda);
        }
    }
    let (mut f_out, s_out) = state.exact();
    let nd = state.into_factorization();
    correct_feasibility(problem, &nd, &mut f_out);
    let s_out: Vec<f64> = s_out.iter().map(|x| x * tbar).collect();
    stats.max_gamma_end = centrality(&f_out, &s_out, tbar, barrier)?
        .1
        .iter()
        .fold(0.0, |a: f64, &g| a.max(g));
    Ok((f_out, s_out, stats))
}

/// The modified program of the first phase together with its starting pair.
#[derive(Debug, Clone)]
pub struct ModifiedProgram {
    /// Rows `[B; B; -B]` as `(tail, head)` pairs.
    pub edges: Vec<(usize, usize)>,
    pub barrier: Barrier,
    pub f: Vec<f64>,
    pub s: Vec<f64>,
    /// `f_c`, the barrier minimizer without equality constraints.
    pub f_c: Vec<f64>,
    /// `f_c` plus its least-norm correction onto `B^T f = b`.
    pub f_o: Vec<f64>,
}

/// `f_c = argmin c^T f + t φ(f)` per coordinate.
pub fn barrier_minimizer(lp: &LpInstance, barrier: &Barrier, t: f64) -> Result<Vec<f64>> {
    (0..lp.m())
        .map(|i| barrier.minimize_linear(i, lp.c[i] / t))
        .collect()
}

/// Builds the modified program for path parameter `t`. `tree` is a separator
/// tree over the rows of `lp`, used for the unit-weight least-norm solve.
pub fn initial_point(lp: &LpInstance, tree: &SeparatorTree, t: f64) -> Result<ModifiedProgram> {
    let m = lp.m();
    let barrier = Barrier::new(lp.l.clone(), lp.u.clone())?;
    let f_c = barrier_minimizer(lp, &barrier, t)?;
    let r_norm = lp.range_norm().max(1.0);
    let nd = NdFactorization::initialize(tree.clone(), &vec![1.0; m], SchurMode::Exact)?;
    // rejects demands that are unbalanced on some component
    nd.apply_inverse(&lp.b)?;
    let res: Vec<f64> = lp
        .bt_mul(&f_c)
        .iter()
        .zip(&lp.b)
        .map(|(a, b)| b - a)
        .collect();
    let x = nd.apply_inverse_projected(&res)?;
    let bx = lp.b_mul(&x);
    let f_o: Vec<f64> = f_c.iter().zip(&bx).map(|(a, b)| a + b).collect();
    let second: Vec<f64> = (0..m).map(|i| 3.0 * r_norm + f_o[i] - f_c[i]).collect();
    if let Some(i) = second.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::Infeasible(format!(
            "least-norm correction exceeds 3R on coordinate {i}"
        )));
    }
    let mut edges = lp.edge_list();
    edges.extend(lp.edge_list());
    edges.extend(lp.heads.iter().copied().zip(lp.tails.iter().copied()));
    let mut l = lp.l.clone();
    l.extend(std::iter::repeat(0.0).take(2 * m));
    let mut u = lp.u.clone();
    u.extend(std::iter::repeat(f64::INFINITY).take(2 * m));
    let mut f = f_c.clone();
    f.extend(&second);
    f.extend(std::iter::repeat(3.0 * r_norm).take(m));
    let mut s: Vec<f64> = (0..m).map(|i| -t * barrier.grad(i, f_c[i])).collect();
    s.extend(second.iter().map(|x| t / x));
    s.extend(std::iter::repeat(t / (3.0 * r_norm)).take(m));
    Ok(ModifiedProgram {
        edges,
        barrier: Barrier::new(l, u)?,
        f,
        s,
        f_c,
        f_o,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IpmStats {
    pub iterations: usize,
    pub restarts: usize,
    pub retractions: usize,
    pub phase1_iterations: usize,
    pub blocks_refreshed: usize,
    pub nodes_touched: usize,
    pub t_start: f64,
    pub t_mid: f64,
    pub t_end: f64,
    /// Largest centrality of the returned pair at `t_end`.
    pub final_gamma: f64,
    /// Duality gap of the returned pair.
    pub final_gap: f64,
}

impl IpmStats {
    fn absorb(&mut self, c: &CenteringStats) {
        self.iterations += c.iterations;
        self.restarts += c.restarts;
        self.retractions += c.retractions;
        self.blocks_refreshed += c.blocks_refreshed;
        self.nodes_touched += c.nodes_touched;
    }
}

#[derive(Debug, Clone)]
pub struct IpmOutput {
    pub f: Vec<f64>,
    pub s: Vec<f64>,
    pub stats: IpmStats,
}

/// The slack of the form `c - B y` closest to `s` in the local norm at `f`,
/// which removes rounding drift picked up in the first phase.
fn restore_dual(
    lp: &LpInstance,
    tree: &SeparatorTree,
    barrier: &Barrier,
    f: &[f64],
    s: &[f64],
) -> Result<Vec<f64>> {
    let m = lp.m();
    let w: Vec<f64> = (0..m).map(|i| barrier.weight(i, f[i])).collect();
    let nd = NdFactorization::initialize(tree.clone(), &w, SchurMode::Exact)?;
    let gap: Vec<f64> = (0..m).map(|i| w[i] * (lp.c[i] - s[i])).collect();
    let y = nd.apply_inverse_projected(&lp.bt_mul(&gap))?;
    let by = lp.b_mul(&y);
    Ok((0..m).map(|i| lp.c[i] - by[i]).collect())
}

fn leaf_threshold(tau: usize) -> usize {
    4 * tau.max(1)
}

/// Two-phase solve. `td` must be a tree decomposition of the graph formed
/// by the rows of `lp`; `r` is a lower bound on the interior radius of the
/// feasible set. The result satisfies `B^T f = b` and lies within `ε L R`
/// of the optimum.
pub fn ripm_solve(
    lp: &LpInstance,
    td: &TreeDecomposition,
    eps: f64,
    r: f64,
    settings: &IpmSettings,
    observer: &mut dyn StepObserver,
) -> Result<IpmOutput> {
    let m = lp.m();
    let tau = td.width();
    let edges = lp.edge_list();
    let loopless: Vec<(usize, usize)> = edges.iter().copied().filter(|e| e.0 != e.1).collect();
    crate::graph::validate_tree_decomposition(lp.n, &loopless, td)?;
    let l_norm = lp.cost_norm().max(1.0);
    let r_norm = lp.range_norm().max(1.0);
    let cfg1 = settings.resolve(3 * m, tau);
    let cfg2 = settings.resolve(m, tau);
    let t0 = match settings.mode {
        Mode::Paper => t_start(m, l_norm, r_norm, r),
        Mode::Practical => t_start_practical(l_norm, r_norm, r, cfg1.lambda),
    };
    let t_mid = l_norm * r_norm;
    let t_end = match settings.mode {
        Mode::Paper => eps / (4.0 * m.max(1) as f64),
        Mode::Practical => eps * l_norm * r_norm / (4.0 * m.max(1) as f64),
    };
    let mut stats = IpmStats {
        t_start: t0,
        t_mid,
        t_end,
        ..IpmStats::default()
    };

    let tree = SeparatorTree::build(lp.n, &edges, td, leaf_threshold(tau))?;
    let modified = initial_point(lp, &tree, t0)?;
    let tree1 = SeparatorTree::build(lp.n, &modified.edges, td, leaf_threshold(tau))?;
    let problem1 = Problem {
        tree: &tree1,
        b: &lp.b,
        barrier: &modified.barrier,
    };
    let (f1, s1, c1) = centering_impl(
        &problem1,
        &modified.f,
        &modified.s,
        t0,
        t_mid,
        &cfg1,
        1,
        observer,
    )?;
    stats.absorb(&c1);
    stats.phase1_iterations = c1.iterations;

    let f: Vec<f64> = (0..m).map(|i| f1[i] + f1[m + i] - f1[2 * m + i]).collect();
    let s: Vec<f64> = s1[..m].to_vec();
    let barrier = Barrier::new(lp.l.clone(), lp.u.clone())?;
    if let Some(i) = (0..m).find(|&i| !barrier.interior(i, f[i])) {
        let aux: f64 = (m..3 * m).map(|j| f1[j]).sum();
        return Err(Error::Infeasible(format!(
            "first phase ended outside the box at coordinate {i} with auxiliary mass {aux:e}"
        )));
    }
    let s = restore_dual(lp, &tree, &barrier, &f, &s)?;
    let problem2 = Problem {
        tree: &tree,
        b: &lp.b,
        barrier: &barrier,
    };
    let (f, s, c2) = centering_impl(&problem2, &f, &s, t_mid, t_end, &cfg2, 2, observer)?;
    stats.absorb(&c2);
    stats.final_gamma = c2.max_gamma_end;
    stats.final_gap = duality_gap(&f, &s, &barrier);
    Ok(IpmOutput { f, s, stats })
}
