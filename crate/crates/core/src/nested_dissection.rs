//! Nested-dissection factorization of `L = B^T W B` over a separator tree.
//!
//! Each tree node `H` keeps a Laplacian `L^(H)` on `F_H ∪ ∂H` (leaves: the
//! Laplacian of their edges; internal nodes: the sum of the children's
//! boundary Schur complements), eliminates `F_H` from it, and passes the
//! boundary Schur complement to its parent. Elimination works on conductances
//! (negated off-diagonals) with pivots formed as sums of remaining
//! conductances, so no subtraction ever happens and every intermediate is a
//! Laplacian.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{connected_components, norm2};
use crate::septree::SeparatorTree;

/// Relative pivot threshold for the general dense routines.
pub const PIVOT_TOL: f64 = 1e-12;
/// Relative tolerance on the per-component mass of a right-hand side.
pub const BALANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchurMode {
    Exact,
    /// Boundary Schur complements are replaced by leverage-score samples with
    /// `ceil(c * k ln k / eps^2)` draws on `k` boundary vertices.
    Sparsified { eps: f64, c: f64, seed: u64 },
}

#[derive(Debug, Clone, Default)]
struct NodeFactor {
    local: Vec<usize>,
    nf: usize,
    pivots: Vec<f64>,
    /// Dense `k x k` conductances after elimination; row `i < nf` holds the
    /// conductances to local indices `i+1..k` at the time `i` was eliminated.
    dense: Vec<f64>,
    /// Boundary Schur complement as a dense conductance matrix on `∂H`.
    schur: Vec<f64>,
}

/// Counters exported for accounting tests and benchmarks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NdStats {
    pub last_recomputed: usize,
    pub total_recomputed: usize,
    pub reweights: usize,
}

#[derive(Debug, Clone)]
pub struct NdFactorization {
    tree: SeparatorTree,
    weights: Vec<f64>,
    mode: SchurMode,
    factors: Vec<NodeFactor>,
    comp: Vec<usize>,
    n_comp: usize,
    pub stats: NdStats,
    versions: Vec<u64>,
}

fn check_weights(w: &[f64]) -> Result<()> {
    if let Some(e) = w.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::NonpositiveWeight { edge: e, weight: w[e] });
    }
    Ok(())
}

impl NdFactorization {
    /// Bottom-up factorization with weights `w` (one per tree edge).
    pub fn initialize(tree: SeparatorTree, w: &[f64], mode: SchurMode) -> Result<Self> {
        if w.len() != tree.m() {
            return Err(Error::Dimension(format!("{} weights for {} edges", w.len(), tree.m())));
        }
        check_weights(w)?;
        let (comp, n_comp) = connected_components(tree.n, &tree.edges);
        let k = tree.nodes.len();
        let mut f = NdFactorization {
            tree,
            weights: w.to_vec(),
            mode,
            factors: vec![NodeFactor::default(); k],
            comp,
            n_comp,
            stats: NdStats::default(),
            versions: vec![0; k],
        };
        let mut scratch = vec![usize::MAX; f.tree.n];
        for h in (0..k).rev() {
            f.factor_node(h, &mut scratch);
        }
        Ok(f)
    }

    pub fn tree(&self) -> &SeparatorTree {
        &self.tree
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mode(&self) -> SchurMode {
        self.mode
    }

    /// Sets `w_e` for each `(e, w_e)` and refactors exactly the nodes on the
    /// leaf-to-root paths of the changed edges.
    pub fn reweight(&mut self, changes: &[(usize, f64)]) -> Result<()> {
        let mut ids = Vec::with_capacity(changes.len());
        for &(e, x) in changes {
            if e >= self.weights.len() {
                return Err(Error::UnknownEdge(e));
            }
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::NonpositiveWeight { edge: e, weight: x });
            }
            ids.push(e);
        }
        let touched = self.tree.nodes_touched_by(&ids)?;
        for &(e, x) in changes {
            self.weights[e] = x;
        }
        let mut scratch = vec![usize::MAX; self.tree.n];
        for &h in touched.iter().rev() {
            self.versions[h] += 1;
            self.factor_node(h, &mut scratch);
        }
        self.stats.last_recomputed = touched.len();
        self.stats.total_recomputed += touched.len();
        self.stats.reweights += 1;
        Ok(())
    }

    /// Dense conductance matrix of `L^(H)` before elimination, on the local
    /// order `F_H` then `∂H`.
    fn assemble(&self, h: usize, pos: &mut [usize]) -> (Vec<usize>, usize, Vec<f64>) {
        let node = &self.tree.nodes[h];
        let local = node.local_vertices();
        let nf = node.eliminated.len();
        let k = local.len();
        for (i, &v) in local.iter().enumerate() {
            pos[v] = i;
        }
        let mut c = vec![0.0; k * k];
        match node.children {
            None => {
                for &e in &node.edges {
                    let (a, b) = self.tree.edges[e];
                    if a == b {
                        continue;
                    }
                    let (i, j) = (pos[a], pos[b]);
                    c[i * k + j] += self.weights[e];
                    c[j * k + i] += self.weights[e];
                }
            }
            Some((c1, c2)) => {
                for ch in [c1, c2] {
                    let bd = &self.tree.nodes[ch].boundary;
                    let s = &self.factors[ch].schur;
                    let kb = bd.len();
                    for (p, &u) in bd.iter().enumerate() {
                        for (q, &v) in bd.iter().enumerate() {
                            if p != q {
                                c[pos[u] * k + pos[v]] += s[p * kb + q];
                            }
                        }
                    }
                }
            }
        }
        for &v in &local {
            pos[v] = usize::MAX;
        }
        (local, nf, c)
    }

    fn factor_node(&mut self, h: usize, pos: &mut [usize]) {
        let (local, nf, mut c) = self.assemble(h, pos);
        let k = local.len();
        let mut pivots = Vec::with_capacity(nf);
        for i in 0..nf {
            let d: f64 = c[i * k + i + 1..(i + 1) * k].iter().sum();
            if d > 0.0 {
                for j in i + 1..k {
                    let cij = c[i * k + j];
                    if cij == 0.0 {
                        continue;
                    }
                    let scale = cij / d;
                    for l in j + 1..k {
                        let cil = c[i * k + l];
                        if cil == 0.0 {
                            continue;
                        }
                        let add = scale * cil;
                        c[j * k + l] += add;
                        c[l * k + j] += add;
                    }
                }
            }
            pivots.push(d);
        }
        let kb = k - nf;
        let mut schur = vec![0.0; kb * kb];
        for p in 0..kb {
            for q in 0..kb {
                if p != q {
                    schur[p * kb + q] = c[(nf + p) * k + nf + q];
                }
            }
        }
        if let SchurMode::Sparsified { eps, c: cs, seed } = self.mode {
            let mix = seed ^ (h as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ self.versions[h].rotate_left(32);
            schur = sparsify(&schur, kb, eps, cs, mix);
        }
        self.factors[h] = NodeFactor {
            local,
            nf,
            pivots,
            dense: c,
            schur,
        };
    }

    /// `L^(H)` as a dense Laplacian on `F_H ∪ ∂H` (local order).
    pub fn node_laplacian(&self, h: usize) -> DMatrix<f64> {
        let mut pos = vec![usize::MAX; self.tree.n];
        let (_, _, c) = self.assemble(h, &mut pos);
        let k = self.factors[h].local.len();
        conductance_to_laplacian(&c, k)
    }

    /// Boundary Schur complement of `L^(H)` on `∂H`.
    pub fn boundary_schur(&self, h: usize) -> DMatrix<f64> {
        let f = &self.factors[h];
        conductance_to_laplacian(&f.schur, f.local.len() - f.nf)
    }

    /// Local index set `F_H` then `∂H`.
    pub fn local_vertices(&self, h: usize) -> &[usize] {
        &self.factors[h].local
    }

    fn check_balance(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.tree.n {
            return Err(Error::Dimension(format!("rhs of length {} for {} vertices", b.len(), self.tree.n)));
        }
        let mut mass = vec![0.0; self.n_comp];
        let mut count = vec![0usize; self.n_comp];
        for (v, &x) in b.iter().enumerate() {
            mass[self.comp[v]] += x;
            count[self.comp[v]] += 1;
        }
        let tol = BALANCE_TOL * norm2(b);
        if let Some(c) = (0..self.n_comp).find(|&c| mass[c].abs() > tol) {
            return Err(Error::NotInRange { component: c, mass: mass[c] });
        }
        Ok(b.iter()
            .enumerate()
            .map(|(v, &x)| x - mass[self.comp[v]] / count[self.comp[v]] as f64)
            .collect())
    }

    fn forward(&self, h: usize, y: &mut [f64]) {
        let f = &self.factors[h];
        for i in 0..f.nf {
            let d = f.pivots[i];
            if d <= 0.0 {
                continue;
            }
            let yi = y[f.local[i]];
            if yi == 0.0 {
                continue;
            }
            let k = f.local.len();
            for (jj, &r) in f.dense[i * k + i + 1..(i + 1) * k].iter().enumerate() {
                if r != 0.0 {
                    y[f.local[i + 1 + jj]] += r / d * yi;
                }
            }
        }
    }

    fn backward(&self, h: usize, y: &[f64], x: &mut [f64]) {
        let f = &self.factors[h];
        for i in (0..f.nf).rev() {
            let d = f.pivots[i];
            let v = f.local[i];
            if d <= 0.0 {
                x[v] = 0.0;
                continue;
            }
            let mut acc = y[v];
            let k = f.local.len();
            for (jj, &r) in f.dense[i * k + i + 1..(i + 1) * k].iter().enumerate() {
                if r != 0.0 {
                    acc += r * x[f.local[i + 1 + jj]];
                }
            }
            x[v] = acc / d;
        }
    }

    /// Solves `L x = b` for `b` balanced on every connected component and
    /// returns the solution with zero mean on each component.
    pub fn apply_inverse(&self, b: &[f64]) -> Result<Vec<f64>> {
        let y = self.check_balance(b)?;
        Ok(self.solve_balanced(y))
    }

    /// Like [`apply_inverse`](Self::apply_inverse) but first projects `b`
    /// onto the range, whatever its component masses. For residuals whose
    /// imbalance is rounding noise relative to the terms that formed them.
    pub fn apply_inverse_projected(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.tree.n {
            return Err(Error::Dimension(format!("rhs of length {} for {} vertices", b.len(), self.tree.n)));
        }
        let mut mass = vec![0.0; self.n_comp];
        let mut count = vec![0usize; self.n_comp];
        for (v, &x) in b.iter().enumerate() {
            mass[self.comp[v]] += x;
            count[self.comp[v]] += 1;
        }
        let y = b
            .iter()
            .enumerate()
            .map(|(v, &x)| x - mass[self.comp[v]] / count[self.comp[v]] as f64)
            .collect();
        Ok(self.solve_balanced(y))
    }

    fn solve_balanced(&self, mut y: Vec<f64>) -> Vec<f64> {
        let k = self.tree.nodes.len();
        // descendants carry larger ids than their ancestors
        for h in (0..k).rev() {
            self.forward(h, &mut y);
        }
        let mut x = vec![0.0; self.tree.n];
        for h in 0..k {
            self.backward(h, &y, &mut x);
        }
        let mut mean = vec![0.0; self.n_comp];
        let mut count = vec![0usize; self.n_comp];
        for (v, &xv) in x.iter().enumerate() {
            mean[self.comp[v]] += xv;
            count[self.comp[v]] += 1;
        }
        for (v, xv) in x.iter_mut().enumerate() {
            *xv -= mean[self.comp[v]] / count[self.comp[v]] as f64;
        }
        x
    }

    /// `X^(H) b_F = L_{∂F} L_{FF}^{-1} b_F`, output on `∂H`.
    pub fn apply_x(&self, h: usize, b_f: &[f64]) -> Result<Vec<f64>> {
        let f = &self.factors[h];
        if b_f.len() != f.nf {
            return Err(Error::Dimension("vector length differs from |F_H|".into()));
        }
        let mut y = vec![0.0; self.tree.n];
        for (i, &x) in b_f.iter().enumerate() {
            y[f.local[i]] = x;
        }
        self.forward(h, &mut y);
        Ok(f.local[f.nf..].iter().map(|&v| -y[v]).collect())
    }

    /// `X^(H)^T y = L_{FF}^{-1} L_{F∂} y`, output on `F_H`.
    pub fn apply_x_transpose(&self, h: usize, y_bd: &[f64]) -> Result<Vec<f64>> {
        let f = &self.factors[h];
        if y_bd.len() != f.local.len() - f.nf {
            return Err(Error::Dimension("vector length differs from |∂H|".into()));
        }
        let zero = vec![0.0; self.tree.n];
        let mut x = vec![0.0; self.tree.n];
        for (i, &v) in f.local[f.nf..].iter().enumerate() {
            x[v] = y_bd[i];
        }
        self.backward(h, &zero, &mut x);
        Ok(f.local[..f.nf].iter().map(|&v| -x[v]).collect())
    }

    /// `L x` with the current weights.
    pub fn apply_laplacian(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.tree.n];
        for (e, &(a, b)) in self.tree.edges.iter().enumerate() {
            let flow = self.weights[e] * (x[b] - x[a]);
            y[b] += flow;
            y[a] -= flow;
        }
        y
    }

    /// `P_w v = W^{1/2} B L^{-1} B^T W^{1/2} v`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.tree.n];
        for (e, &(a, b)) in self.tree.edges.iter().enumerate() {
            let z = self.weights[e].sqrt() * v[e];
            y[b] += z;
            y[a] -= z;
        }
        let x = self.apply_inverse(&y)?;
        Ok(self
            .tree
            .edges
            .iter()
            .enumerate()
            .map(|(e, &(a, b))| self.weights[e].sqrt() * (x[b] - x[a]))
            .collect())
    }
}

fn conductance_to_laplacian(c: &[f64], k: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            if i != j {
                l[(i, j)] = -c[i * k + j];
                l[(i, i)] += c[i * k + j];
            }
        }
    }
    l
}

/// Leverage-score sampling of a dense conductance matrix on `k` vertices.
/// Returns the input unchanged when the sample budget reaches the edge count.
fn sparsify(c: &[f64], k: usize, eps: f64, cs: f64, seed: u64) -> Vec<f64> {
    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if c[i * k + j] > 0.0 {
                edges.push((i, j, c[i * k + j]));
            }
        }
    }
    let kf = (k as f64).max(2.0);
    let q = (cs * kf * kf.ln() / (eps * eps)).ceil() as usize;
    if q >= edges.len() {
        return c.to_vec();
    }
    let l = conductance_to_laplacian(c, k);
    let pinv = l
        .clone()
        .pseudo_inverse(1e-12 * l.amax().max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DMatrix::zeros(k, k));
    let lev: Vec<f64> = edges
        .iter()
        .map(|&(i, j, w)| {
            let r = pinv[(i, i)] + pinv[(j, j)] - 2.0 * pinv[(i, j)];
            (w * r).clamp(1e-12, 1.0)
        })
        .collect();
    let total: f64 = lev.iter().sum();
    let mut cdf = Vec::with_capacity(lev.len());
    let mut acc = 0.0;
    for &x in &lev {
        acc += x / total;
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; k * k];
    for _ in 0..q {
        let u: f64 = rng.gen::<f64>() * acc;
        let idx = cdf.partition_point(|&x| x < u).min(edges.len() - 1);
        let (i, j, w) = edges[idx];
        let add = w / (q as f64 * lev[idx] / total);
        out[i * k + j] += add;
        out[j * k + i] += add;
    }
    out
}

fn submatrix(l: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| l[(rows[i], cols[j])])
}

fn checked_lu(lff: &DMatrix<f64>) -> Result<nalgebra::linalg::FullPivLU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let scale = lff.amax();
    let lu = lff.clone().full_piv_lu();
    let u = lu.u();
    let tiny = (0..u.nrows()).any(|i| u[(i, i)].abs() <= PIVOT_TOL * scale);
    if tiny || (scale == 0.0 && lff.nrows() > 0) {
        return Err(Error::Singular);
    }
    Ok(lu)
}

/// `Sc(L, C) = L_CC - L_CF L_FF^{-1} L_FC` for a general square matrix.
pub fn schur_complement(l: &DMatrix<f64>, f: &[usize], c: &[usize]) -> Result<DMatrix<f64>> {
    let lcc = submatrix(l, c, c);
    if f.is_empty() {
        return Ok(lcc);
    }
    let lff = submatrix(l, f, f);
    let lfc = submatrix(l, f, c);
    let lcf = submatrix(l, c, f);
    let lu = checked_lu(&lff)?;
    let z = lu.solve(&lfc).ok_or(Error::Singular)?;
    Ok(lcc - lcf * z)
}

/// Block factorization `P L P^T = lower * middle * upper` in the order
/// `[F, C]`, with `middle = blockdiag(L_FF, Sc(L, C))`.
#[derive(Debug, Clone)]
pub struct BlockCholesky {
    pub order: Vec<usize>,
    pub lower: DMatrix<f64>,
    pub middle: DMatrix<f64>,
    pub upper: DMatrix<f64>,
}

impl BlockCholesky {
    /// Product of the factors mapped back to the original index order.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let p = &self.lower * &self.middle * &self.upper;
        let n = self.order.len();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(self.order[i], self.order[j])] = p[(i, j)];
            }
        }
        out
    }
}

pub fn block_cholesky(l: &DMatrix<f64>, f: &[usize], c: &[usize]) -> Result<BlockCholesky> {
    let (nf, nc) = (f.len(), c.len());
    let n = nf + nc;
    let mut order = f.to_vec();
    order.extend_from_slice(c);
    let sc = schur_complement(l, f, c)?;
    let mut lower = DMatrix::identity(n, n);
    let mut upper = DMatrix::identity(n, n);
    let mut middle = DMatrix::zeros(n, n);
    if nf > 0 {
        let lff = submatrix(l, f, f);
        let lu = checked_lu(&lff)?;
        // L_CF L_FF^{-1} = (L_FF^{-T} L_FC)^T
        let lfft = lff.transpose();
        let left = checked_lu(&lfft)?
            .solve(&submatrix(l, f, c))
            .ok_or(Error::Singular)?
            .transpose();
        let right = lu.solve(&submatrix(l, f, c)).ok_or(Error::Singular)?;
        lower.view_mut((nf, 0), (nc, nf)).copy_from(&left);
        upper.view_mut((0, nf), (nf, nc)).copy_from(&right);
        middle.view_mut((0, 0), (nf, nf)).copy_from(&lff);
    }
    middle.view_mut((nf, nf), (nc, nc)).copy_from(&sc);
    Ok(BlockCholesky {
        order,
        lower,
        middle,
        upper,
    })
}
