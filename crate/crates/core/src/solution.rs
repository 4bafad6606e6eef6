//! Implicit maintenance of the primal-dual pair under projected steps.
//!
//! With `L = B^T W B`, `y = B^T W^{1/2} v` and `z = L^{-1} y`, one move of
//! size `h` is
//!
//! ```text
//! f <- f + h (W^{1/2} v - W B z)
//! s <- s + h B z            (s kept scaled by 1/t̄)
//! ```
//!
//! Only the vertex accumulator `Z = Σ h z` and the running total `H = Σ h`
//! are updated per move; an edge is written out ("materialized") only when its
//! weight or direction changes. The approximations `f̄, s̄` are refreshed per
//! leaf block with a multi-scale drift rule: at step `k`, for each `ℓ` with
//! `2^ℓ | k`, a block is refreshed if it drifted at least `ε̄ / (2 L)` in its
//! weighted 2-norm since step `k - 2^ℓ`, where `L = ⌈log₂ m⌉`. Any interval
//! since the last refresh splits into at most `2 L` aligned dyadic pieces, so
//! the deviation stays below `ε̄` in every coordinate.

use crate::error::{Error, Result};
use crate::graph::norm2;
use crate::nested_dissection::{NdFactorization, SchurMode};
use crate::oracle;
use crate::septree::SeparatorTree;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaintainConfig {
    /// Approximation radius `ε̄`.
    pub eps_bar: f64,
    /// Per-move bound on `|h| ‖v‖₂`.
    pub beta: f64,
    pub schur: SchurMode,
    /// Keep a dense reference copy of `(f, s)` for testing.
    pub dense_mirror: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Start,
    Reweighted,
    Moved,
}

/// Per-state counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaintainStats {
    pub steps: usize,
    pub moves: usize,
    pub blocks_refreshed: usize,
    pub last_blocks_refreshed: usize,
    pub last_blocks_reweighted: usize,
    pub last_nodes_touched: usize,
    pub nodes_touched: usize,
    pub materialized: usize,
}

#[derive(Debug, Clone)]
struct Snapshot {
    f: Vec<f64>,
    s: Vec<f64>,
}

#[derive(Debug, Clone)]
struct DenseMirror {
    f: Vec<f64>,
    s: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SolutionState {
    cfg: MaintainConfig,
    nd: NdFactorization,
    tails: Vec<usize>,
    heads: Vec<usize>,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    log_m: usize,

    w: Vec<f64>,
    v: Vec<f64>,
    y: Vec<f64>,
    z: Option<Vec<f64>>,

    fbase: Vec<f64>,
    hsnap: Vec<f64>,
    zsnap: Vec<f64>,
    s0: Vec<f64>,
    acc_z: Vec<f64>,
    acc_h: f64,

    fbar: Vec<f64>,
    sbar: Vec<f64>,
    k: usize,
    last_refresh: Vec<usize>,
    snaps: Vec<Snapshot>,
    phase: Phase,
    mirror: Option<DenseMirror>,
    pub stats: MaintainStats,
}

/// `ℓ_k`: exponent of the largest power of two dividing `k` (0 for `k = 0`).
pub fn ell(k: usize) -> u32 {
    if k == 0 {
        0
    } else {
        k.trailing_zeros()
    }
}

/// `N_k = 2^{2 ℓ_k} (β/ε̄)² log² m` (natural log, at least 1).
pub fn block_budget(k: usize, beta: f64, eps_bar: f64, m: usize) -> f64 {
    let lm = (m.max(3) as f64).ln();
    4f64.powi(ell(k) as i32) * (beta / eps_bar).powi(2) * lm * lm
}

impl SolutionState {
    /// `f⁰`, scaled dual `s⁰ / t̄`, direction `v` and weights `w`, all per
    /// edge of `tree`.
    pub fn initialize(
        tree: &SeparatorTree,
        f0: &[f64],
        s0: &[f64],
        v: &[f64],
        w: &[f64],
        cfg: MaintainConfig,
    ) -> Result<Self> {
        let m = tree.m();
        for (name, x) in [("f", f0), ("s", s0), ("v", v), ("w", w)] {
            if x.len() != m {
                return Err(Error::Dimension(format!("{name} has length {} for {m} edges", x.len())));
            }
        }
        let nd = NdFactorization::initialize(tree.clone(), w, cfg.schur)?;
        Self::from_factorization(nd, f0, s0, v, cfg)
    }

    /// Same as [`initialize`](Self::initialize) but reuses a factorization
    /// whose weights already equal `w`.
    pub fn from_factorization(
        nd: NdFactorization,
        f0: &[f64],
        s0: &[f64],
        v: &[f64],
        cfg: MaintainConfig,
    ) -> Result<Self> {
        let tree = nd.tree();
        let m = tree.m();
        let n = tree.n;
        let blocks = tree.leaf_blocks();
        let block_of = tree.block_of_edge();
        let tails: Vec<usize> = tree.edges.iter().map(|e| e.0).collect();
        let heads: Vec<usize> = tree.edges.iter().map(|e| e.1).collect();
        let w = nd.weights().to_vec();
        let mut y = vec![0.0; n];
        for e in 0..m {
            let x = w[e].sqrt() * v[e];
            y[heads[e]] += x;
            y[tails[e]] -= x;
        }
        let log_m = (m.max(2) as f64).log2().ceil() as usize;
        let snap = Snapshot {
            f: f0.to_vec(),
            s: s0.to_vec(),
        };
        let mirror = cfg.dense_mirror.then(|| DenseMirror {
            f: f0.to_vec(),
            s: s0.to_vec(),
        });
        Ok(Self {
            cfg,
            nd,
            tails,
            heads,
            last_refresh: vec![0; blocks.len()],
            blocks,
            block_of,
            log_m,
            w,
            v: v.to_vec(),
            y,
            z: None,
            fbase: f0.to_vec(),
            hsnap: vec![0.0; m],
            zsnap: vec![0.0; m],
            s0: s0.to_vec(),
            acc_z: vec![0.0; n],
            acc_h: 0.0,
            fbar: f0.to_vec(),
            sbar: s0.to_vec(),
            k: 0,
            snaps: vec![snap; log_m + 1],
            phase: Phase::Start,
            mirror,
            stats: MaintainStats::default(),
        })
    }

    pub fn m(&self) -> usize {
        self.w.len()
    }

    pub fn step(&self) -> usize {
        self.k
    }

    pub fn config(&self) -> &MaintainConfig {
        &self.cfg
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn direction(&self) -> &[f64] {
        &self.v
    }

    pub fn fbar(&self) -> &[f64] {
        &self.fbar
    }

    /// `s̄ / t̄`.
    pub fn sbar(&self) -> &[f64] {
        &self.sbar
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn factorization(&self) -> &NdFactorization {
        &self.nd
    }

    /// Consumes the state, handing back the factorization for reuse.
    pub fn into_factorization(self) -> NdFactorization {
        self.nd
    }

    #[inline]
    fn bz(&self, e: usize) -> f64 {
        self.acc_z[self.heads[e]] - self.acc_z[self.tails[e]]
    }

    #[inline]
    fn f_at(&self, e: usize) -> f64 {
        self.fbase[e] + self.w[e].sqrt() * self.v[e] * (self.acc_h - self.hsnap[e])
            - self.w[e] * (self.bz(e) - self.zsnap[e])
    }

    #[inline]
    fn s_at(&self, e: usize) -> f64 {
        self.s0[e] + self.bz(e)
    }

    fn materialize(&mut self, e: usize) {
        self.fbase[e] = self.f_at(e);
        self.hsnap[e] = self.acc_h;
        self.zsnap[e] = self.bz(e);
        self.stats.materialized += 1;
    }

    /// Changes `w_e` for each `(e, w_e)`; must open a step.
    pub fn reweight(&mut self, changes: &[(usize, f64)]) -> Result<()> {
        if self.phase != Phase::Start {
            return Err(Error::PhaseOrder("reweight must precede move within a step"));
        }
        for &(e, x) in changes {
            if e >= self.m() {
                return Err(Error::UnknownEdge(e));
            }
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::NonpositiveWeight { edge: e, weight: x });
            }
        }
        let mut seen = vec![false; self.blocks.len()];
        let mut blocks = 0;
        for &(e, _) in changes {
            let b = self.block_of[e];
            if !seen[b] {
                seen[b] = true;
                blocks += 1;
            }
        }
        for &(e, x) in changes {
            self.materialize(e);
            self.w[e] = x;
        }
        self.nd.reweight(changes)?;
        if !changes.is_empty() {
            self.z = None;
        }
        self.stats.last_blocks_reweighted = blocks;
        self.stats.last_nodes_touched = self.nd.stats.last_recomputed;
        self.stats.nodes_touched += self.nd.stats.last_recomputed;
        self.phase = Phase::Reweighted;
        Ok(())
    }

    /// Updates `v` on the given coordinates and moves by `h`.
    pub fn move_step(&mut self, h: f64, v_changes: &[(usize, f64)]) -> Result<()> {
        for &(e, x) in v_changes {
            if e >= self.m() {
                return Err(Error::UnknownEdge(e));
            }
            self.materialize(e);
            self.v[e] = x;
            self.z = None;
        }
        let size = h.abs() * norm2(&self.v);
        if size > self.cfg.beta * (1.0 + 1e-9) {
            return Err(Error::StepBound {
                value: size,
                beta: self.cfg.beta,
            });
        }
        if self.z.is_none() {
            // rebuilt in full: incremental updates lose the small entries
            // next to large ones
            self.y.iter_mut().for_each(|x| *x = 0.0);
            for e in 0..self.w.len() {
                let x = self.w[e].sqrt() * self.v[e];
                self.y[self.heads[e]] += x;
                self.y[self.tails[e]] -= x;
            }
            self.z = Some(self.nd.apply_inverse_projected(&self.y)?);
        }
        let z = self.z.as_ref().unwrap();
        for (a, &zi) in self.acc_z.iter_mut().zip(z) {
            *a += h * zi;
        }
        self.acc_h += h;
        if let Some(mirror) = self.mirror.as_mut() {
            let edges: Vec<(usize, usize)> =
                self.tails.iter().copied().zip(self.heads.iter().copied()).collect();
            let x = oracle::dense_potentials(self.nd.tree().n, &edges, &self.w, &self.v);
            for (e, &(t, hd)) in edges.iter().enumerate() {
                let sw = self.w[e].sqrt();
                let bx = x[hd] - x[t];
                mirror.f[e] += h * sw * (self.v[e] - sw * bx);
                mirror.s[e] += h * bx;
            }
        }
        self.stats.moves += 1;
        self.phase = Phase::Moved;
        Ok(())
    }

    fn block_drift(&self, b: usize, snap: &Snapshot, f_now: &[f64], s_now: &[f64]) -> f64 {
        let mut df = 0.0;
        let mut ds = 0.0;
        for &e in &self.blocks[b] {
            let a = f_now[e] - snap.f[e];
            let c = s_now[e] - snap.s[e];
            df += a * a / self.w[e];
            ds += c * c * self.w[e];
        }
        df.sqrt().max(ds.sqrt())
    }

    /// Closes the step: refreshes drifted blocks of `f̄, s̄` and returns the
    /// edges whose approximations changed.
    pub fn approximate(&mut self) -> Result<Vec<usize>> {
        let (f_now, s_now) = self.exact();
        self.approximate_from(&f_now, &s_now)
    }

    /// [`Self::approximate`] given the current `exact()` pair.
    pub(crate) fn approximate_from(&mut self, f_now: &[f64], s_now: &[f64]) -> Result<Vec<usize>> {
        if self.phase != Phase::Moved {
            return Err(Error::PhaseOrder("approximate must follow a move"));
        }
        self.k += 1;
        let k = self.k;
        let nb = self.blocks.len();
        let mut refresh = vec![false; nb];
        if k % (1usize << self.log_m) == 0 {
            refresh.iter_mut().for_each(|r| *r = true);
        } else {
            let threshold = self.cfg.eps_bar / (2.0 * self.log_m.max(1) as f64);
            for l in 0..=ell(k).min(self.log_m as u32) as usize {
                let since = k - (1usize << l);
                for b in 0..nb {
                    if refresh[b] || self.last_refresh[b] > since {
                        continue;
                    }
                    if self.block_drift(b, &self.snaps[l], f_now, s_now) >= threshold {
                        refresh[b] = true;
                    }
                }
            }
        }
        let mut changed = Vec::new();
        let mut count = 0;
        for b in 0..nb {
            if !refresh[b] {
                continue;
            }
            count += 1;
            self.last_refresh[b] = k;
            for &e in &self.blocks[b] {
                if self.fbar[e] != f_now[e] || self.sbar[e] != s_now[e] {
                    changed.push(e);
                }
                self.fbar[e] = f_now[e];
                self.sbar[e] = s_now[e];
            }
        }
        for l in 0..=ell(k).min(self.log_m as u32) as usize {
            self.snaps[l].f.copy_from_slice(f_now);
            self.snaps[l].s.copy_from_slice(s_now);
        }
        self.stats.steps += 1;
        self.stats.last_blocks_refreshed = count;
        self.stats.blocks_refreshed += count;
        self.phase = Phase::Start;
        Ok(changed)
    }

    /// Current `(f, s / t̄)`.
    pub fn exact(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.m();
        ((0..m).map(|e| self.f_at(e)).collect(), (0..m).map(|e| self.s_at(e)).collect())
    }

    /// Dense reference `(f, s / t̄)` when the mirror is enabled.
    pub fn mirror(&self) -> Option<(&[f64], &[f64])> {
        self.mirror.as_ref().map(|m| (m.f.as_slice(), m.s.as_slice()))
    }

    /// `max(‖W^{-1/2}(f̄ - f)‖_∞, ‖W^{1/2}(s̄ - s)‖_∞ / t̄)` against `exact()`.
    pub fn deviation(&self) -> (f64, f64) {
        let (f, s) = self.exact();
        let mut df: f64 = 0.0;
        let mut ds: f64 = 0.0;
        for e in 0..self.m() {
            df = df.max((self.fbar[e] - f[e]).abs() / self.w[e].sqrt());
            ds = ds.max((self.sbar[e] - s[e]).abs() * self.w[e].sqrt());
        }
        (df, ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TreeDecomposition;

    fn cycle_state(mirror: bool) -> SolutionState {
        // C6 with a chord, leaves of at most two edges
        let edges = vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)];
        let td = TreeDecomposition::new(
            vec![vec![0, 1, 2, 3], vec![0, 3, 4, 5]],
            vec![(0, 1)],
        );
        let tree = SeparatorTree::build(6, &edges, &td, 2).unwrap();
        let m = edges.len();
        let f0: Vec<f64> = (0..m).map(|e| 0.5 + 0.1 * e as f64).collect();
        let s0: Vec<f64> = (0..m).map(|e| 1.0 - 0.05 * e as f64).collect();
        let v: Vec<f64> = (0..m).map(|e| ((e * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let w: Vec<f64> = (0..m).map(|e| 1.0 + e as f64 * 0.25).collect();
        let cfg = MaintainConfig {
            eps_bar: 0.05,
            beta: 10.0,
            schur: SchurMode::Exact,
            dense_mirror: mirror,
        };
        SolutionState::initialize(&tree, &f0, &s0, &v, &w, cfg).unwrap()
    }

    fn bt(st: &SolutionState, f: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; 6];
        for e in 0..f.len() {
            y[st.heads[e]] += f[e];
            y[st.tails[e]] -= f[e];
        }
        y
    }

    #[test]
    fn ell_values() {
        assert_eq!((ell(12), ell(8), ell(7), ell(0)), (2, 3, 0, 0));
    }

    #[test]
    fn init_is_exact() {
        let st = cycle_state(false);
        let (f, s) = st.exact();
        assert_eq!(f, st.fbase);
        assert_eq!(s, st.s0);
        assert_eq!(st.deviation(), (0.0, 0.0));
    }

    #[test]
    fn move_matches_mirror_and_keeps_bt_f() {
        let mut st = cycle_state(true);
        let (f0, _) = st.exact();
        let b0 = bt(&st, &f0);
        for step in 0..10 {
            if step % 3 == 1 {
                st.reweight(&[(step % 7, 2.0 + step as f64)]).unwrap();
            }
            st.move_step(-0.1, &[((step * 3) % 7, 0.2 * step as f64 - 0.5)]).unwrap();
            st.approximate().unwrap();
            let (f, s) = st.exact();
            let (mf, ms) = st.mirror().unwrap();
            for e in 0..7 {
                assert!((f[e] - mf[e]).abs() < 1e-10, "f step {step}");
                assert!((s[e] - ms[e]).abs() < 1e-10, "s step {step}");
            }
            for (a, b) in bt(&st, &f).iter().zip(&b0) {
                assert!((a - b).abs() < 1e-12);
            }
            let (df, ds) = st.deviation();
            assert!(df <= 0.05 && ds <= 0.05);
        }
    }

    #[test]
    fn zero_move_refreshes_nothing() {
        let mut st = cycle_state(false);
        st.move_step(0.0, &[]).unwrap();
        assert!(st.approximate().unwrap().is_empty());
        st.move_step(0.0, &[]).unwrap();
        st.approximate().unwrap();
        assert_eq!(st.stats.blocks_refreshed, 0);
    }

    #[test]
    fn moves_are_linear() {
        let mut a = cycle_state(false);
        let mut b = cycle_state(false);
        a.move_step(-0.1, &[]).unwrap();
        a.move_step(-0.2, &[]).unwrap();
        b.move_step(-0.3, &[]).unwrap();
        let (fa, sa) = a.exact();
        let (fb, sb) = b.exact();
        for e in 0..7 {
            assert!((fa[e] - fb[e]).abs() < 1e-12 && (sa[e] - sb[e]).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_order_enforced() {
        let mut st = cycle_state(false);
        assert!(matches!(st.approximate(), Err(Error::PhaseOrder(_))));
        st.move_step(-0.1, &[]).unwrap();
        assert!(matches!(st.reweight(&[]), Err(Error::PhaseOrder(_))));
    }

    #[test]
    fn step_bound_enforced() {
        let mut st = cycle_state(false);
        st.cfg.beta = 0.01;
        assert!(matches!(st.move_step(-1.0, &[]), Err(Error::StepBound { .. })));
    }

    #[test]
    fn single_block_reweight_counted() {
        let mut st = cycle_state(false);
        st.reweight(&[(0, 3.0)]).unwrap();
        assert_eq!(st.stats.last_blocks_reweighted, 1);
        st.move_step(0.0, &[]).unwrap();
        st.approximate().unwrap();
        st.reweight(&[]).unwrap();
        assert_eq!(st.stats.last_blocks_reweighted, 0);
    }
}
