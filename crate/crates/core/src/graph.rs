//! Graph, linear-program and tree-decomposition data model.
//!
//! Edge orientation in the incidence matrix is fixed as `-1` at the tail and
//! `+1` at the head, so `(B^T f)_v` is the net inflow of `f` at `v`.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A directed multigraph without self loops. Edge ids are `0..m` and stable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl DirectedGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        for (e, &(t, h)) in edges.iter().enumerate() {
            if t >= n || h >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {e} = ({t}, {h}) has an endpoint outside 0..{n}"
                )));
            }
            if t == h {
                return Err(Error::InvalidGraph(format!("edge {e} is a self loop at {t}")));
            }
        }
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn tail(&self, e: usize) -> usize {
        self.edges[e].0
    }

    pub fn head(&self, e: usize) -> usize {
        self.edges[e].1
    }
}

/// Sparse matrix in triplet form; just enough for incidence matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for &(i, j, x) in &self.entries {
            d[(i, j)] += x;
        }
        d
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for &(i, j, a) in &self.entries {
            y[i] += a * x[j];
        }
        y
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        for &(i, j, a) in &self.entries {
            y[j] += a * x[i];
        }
        y
    }
}

/// Edge-vertex incidence matrix `B` (m x n): row `e` is `-1` at the tail and
/// `+1` at the head.
pub fn incidence_matrix(g: &DirectedGraph) -> SparseMatrix {
    let mut entries = Vec::with_capacity(2 * g.m());
    for (e, &(t, h)) in g.edges().iter().enumerate() {
        entries.push((e, t, -1.0));
        entries.push((e, h, 1.0));
    }
    SparseMatrix {
        nrows: g.m(),
        ncols: g.n(),
        entries,
    }
}

/// Dense weighted Laplacian `B^T W B`.
pub fn weighted_laplacian(g: &DirectedGraph, w: &[f64]) -> Result<DMatrix<f64>> {
    if w.len() != g.m() {
        return Err(Error::Dimension(format!(
            "{} weights for {} edges",
            w.len(),
            g.m()
        )));
    }
    let mut l = DMatrix::zeros(g.n(), g.n());
    for (e, (&(t, h), &we)) in g.edges().iter().zip(w).enumerate() {
        if !(we > 0.0) {
            return Err(Error::NonpositiveWeight { edge: e, weight: we });
        }
        l[(t, t)] += we;
        l[(h, h)] += we;
        l[(t, h)] -= we;
        l[(h, t)] -= we;
    }
    Ok(l)
}

/// Integral min-cost flow instance. `demand[v]` is the required net inflow at
/// `v` (so sources have negative demand).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowInstance {
    pub graph: DirectedGraph,
    pub demand: Vec<i64>,
    pub capacity: Vec<i64>,
    pub cost: Vec<i64>,
}

impl FlowInstance {
    pub fn new(
        graph: DirectedGraph,
        demand: Vec<i64>,
        capacity: Vec<i64>,
        cost: Vec<i64>,
    ) -> Result<Self> {
        if demand.len() != graph.n() {
            return Err(Error::Dimension(format!(
                "{} demands for {} vertices",
                demand.len(),
                graph.n()
            )));
        }
        if capacity.len() != graph.m() || cost.len() != graph.m() {
            return Err(Error::Dimension(format!(
                "{} capacities and {} costs for {} edges",
                capacity.len(),
                cost.len(),
                graph.m()
            )));
        }
        if let Some(e) = capacity.iter().position(|&u| u <= 0) {
            return Err(Error::InvalidGraph(format!(
                "edge {e} has nonpositive capacity {}",
                capacity[e]
            )));
        }
        let total: i64 = demand.iter().sum();
        if total != 0 {
            return Err(Error::UnbalancedDemand(total));
        }
        Ok(Self {
            graph,
            demand,
            capacity,
            cost,
        })
    }

    /// Largest absolute value among demands, capacities and costs (at least 1).
    pub fn bound_m(&self) -> i64 {
        self.demand
            .iter()
            .chain(&self.capacity)
            .chain(&self.cost)
            .map(|x| x.abs())
            .max()
            .unwrap_or(0)
            .max(1)
    }

    pub fn flow_cost(&self, f: &[i64]) -> i64 {
        f.iter().zip(&self.cost).map(|(x, c)| x * c).sum()
    }
}

/// `min c^T f  s.t.  B^T f = b, l <= f <= u` over a multigraph incidence.
///
/// Rows may be self loops (`tail == head`), which give zero rows of `B`; this
/// is how box-only programs are expressed. `u` may be `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpInstance {
    pub n: usize,
    pub tails: Vec<usize>,
    pub heads: Vec<usize>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
}

impl LpInstance {
    pub fn new(
        n: usize,
        tails: Vec<usize>,
        heads: Vec<usize>,
        b: Vec<f64>,
        c: Vec<f64>,
        l: Vec<f64>,
        u: Vec<f64>,
    ) -> Result<Self> {
        let m = tails.len();
        if heads.len() != m || c.len() != m || l.len() != m || u.len() != m || b.len() != n {
            return Err(Error::Dimension("lp vectors disagree in length".into()));
        }
        if tails.iter().chain(&heads).any(|&v| v >= n) {
            return Err(Error::InvalidGraph("lp row endpoint out of range".into()));
        }
        if let Some(i) = (0..m).position(|i| !(l[i] < u[i])) {
            return Err(Error::Dimension(format!(
                "coordinate {i} has l = {} >= u = {}",
                l[i], u[i]
            )));
        }
        Ok(Self {
            n,
            tails,
            heads,
            b,
            c,
            l,
            u,
        })
    }

    pub fn m(&self) -> usize {
        self.tails.len()
    }

    /// `L = ||c||_2`.
    pub fn cost_norm(&self) -> f64 {
        norm2(&self.c)
    }

    /// `R = ||u - l||_2` (finite coordinates only).
    pub fn range_norm(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.l)
            .filter(|(u, _)| u.is_finite())
            .map(|(u, l)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }

    /// `B^T f`: net inflow per vertex.
    pub fn bt_mul(&self, f: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for ((&t, &h), &x) in self.tails.iter().zip(&self.heads).zip(f) {
            y[h] += x;
            y[t] -= x;
        }
        y
    }

    /// `B x`: potential difference head minus tail per row.
    pub fn b_mul(&self, x: &[f64]) -> Vec<f64> {
        self.tails
            .iter()
            .zip(&self.heads)
            .map(|(&t, &h)| x[h] - x[t])
            .collect()
    }

    pub fn objective(&self, f: &[f64]) -> f64 {
        self.c.iter().zip(f).map(|(c, x)| c * x).sum()
    }

    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.tails.iter().copied().zip(self.heads.iter().copied()).collect()
    }
}

/// `b = d`, `l = 0`, `u = capacity`, `c = cost`.
pub fn flow_to_lp(inst: &FlowInstance) -> Result<LpInstance> {
    let total: i64 = inst.demand.iter().sum();
    if total != 0 {
        return Err(Error::UnbalancedDemand(total));
    }
    let g = &inst.graph;
    LpInstance::new(
        g.n(),
        g.edges().iter().map(|e| e.0).collect(),
        g.edges().iter().map(|e| e.1).collect(),
        inst.demand.iter().map(|&d| d as f64).collect(),
        inst.cost.iter().map(|&c| c as f64).collect(),
        vec![0.0; g.m()],
        inst.capacity.iter().map(|&u| u as f64).collect(),
    )
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    // scaled to survive entries near the overflow threshold
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * x.iter().map(|v| (v / scale) * (v / scale)).sum::<f64>().sqrt()
}

/// Connected components of an undirected view of `edges`. Returns the
/// component id of every vertex and the number of components.
pub fn connected_components(n: usize, edges: &[(usize, usize)]) -> (Vec<usize>, usize) {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut id = vec![usize::MAX; n];
    let mut comp = vec![0; n];
    let mut count = 0;
    for v in 0..n {
        let r = find(&mut parent, v);
        if id[r] == usize::MAX {
            id[r] = count;
            count += 1;
        }
        comp[v] = id[r];
    }
    (comp, count)
}

/// Bags plus tree adjacency among bag ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TreeDecomposition {
    pub bags: Vec<Vec<usize>>,
    pub edges: Vec<(usize, usize)>,
}

impl TreeDecomposition {
    pub fn new(bags: Vec<Vec<usize>>, edges: Vec<(usize, usize)>) -> Self {
        let bags = bags
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b.dedup();
                b
            })
            .collect();
        Self { bags, edges }
    }

    /// One bag holding every vertex.
    pub fn trivial(n: usize) -> Self {
        Self::new(vec![(0..n).collect()], vec![])
    }

    /// Max bag size minus one (0 for an empty decomposition).
    pub fn width(&self) -> usize {
        self.bags.iter().map(Vec::len).max().unwrap_or(1).saturating_sub(1)
    }

    /// Sum of bag sizes.
    pub fn size(&self) -> usize {
        self.bags.iter().map(Vec::len).sum()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.bags.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Bags restricted to `keep` (vertex mask); the tree is unchanged.
    pub fn restrict(&self, keep: &[bool]) -> Self {
        Self {
            bags: self
                .bags
                .iter()
                .map(|b| b.iter().copied().filter(|&v| keep[v]).collect())
                .collect(),
            edges: self.edges.clone(),
        }
    }

    /// Adds vertex `v` to every bag.
    pub fn with_vertex_everywhere(&self, v: usize) -> Self {
        let mut bags = self.bags.clone();
        if bags.is_empty() {
            bags.push(Vec::new());
        }
        for b in &mut bags {
            b.push(v);
            b.sort_unstable();
            b.dedup();
        }
        Self {
            bags,
            edges: self.edges.clone(),
        }
    }
}

/// First violated tree-decomposition axiom, with a witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TdViolation {
    VertexOutOfRange { bag: usize, vertex: usize },
    BadTreeEdge { a: usize, b: usize },
    NotATree,
    VertexUncovered(usize),
    EdgeUncovered(usize, usize),
    DisconnectedOccurrence(usize),
}

impl TdViolation {
    /// Name of the violated axiom.
    pub fn axiom(&self) -> &'static str {
        match self {
            TdViolation::VertexOutOfRange { .. } | TdViolation::BadTreeEdge { .. } | TdViolation::NotATree => {
                "tree structure"
            }
            TdViolation::VertexUncovered(_) => "vertex coverage",
            TdViolation::EdgeUncovered(..) => "edge coverage",
            TdViolation::DisconnectedOccurrence(_) => "running intersection",
        }
    }
}

impl fmt::Display for TdViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TdViolation::VertexOutOfRange { bag, vertex } => {
                write!(f, "bag {bag} holds vertex {vertex} which is out of range")
            }
            TdViolation::BadTreeEdge { a, b } => write!(f, "tree edge ({a}, {b}) is invalid"),
            TdViolation::NotATree => write!(f, "bag adjacency is not a tree"),
            TdViolation::VertexUncovered(v) => write!(f, "vertex {v} is in no bag"),
            TdViolation::EdgeUncovered(u, v) => {
                write!(f, "edge ({u}, {v}) is not contained in any bag")
            }
            TdViolation::DisconnectedOccurrence(v) => {
                write!(f, "bags containing vertex {v} do not form a connected subtree")
            }
        }
    }
}

impl std::error::Error for TdViolation {}

/// Checks the tree-decomposition axioms against an undirected view of
/// `edges` on `n` vertices.
pub fn validate_tree_decomposition(
    n: usize,
    edges: &[(usize, usize)],
    td: &TreeDecomposition,
) -> Result<(), TdViolation> {
    let k = td.bags.len();
    for (i, bag) in td.bags.iter().enumerate() {
        if let Some(&v) = bag.iter().find(|&&v| v >= n) {
            return Err(TdViolation::VertexOutOfRange { bag: i, vertex: v });
        }
    }
    for &(a, b) in &td.edges {
        if a >= k || b >= k || a == b {
            return Err(TdViolation::BadTreeEdge { a, b });
        }
    }
    if k > 0 {
        let (_, comps) = connected_components(k, &td.edges);
        if td.edges.len() + 1 != k || comps != 1 {
            return Err(TdViolation::NotATree);
        }
    } else if n > 0 {
        return Err(TdViolation::VertexUncovered(0));
    }

    let mut bags_of = vec![Vec::new(); n];
    for (i, bag) in td.bags.iter().enumerate() {
        for &v in bag {
            bags_of[v].push(i);
        }
    }
    if let Some(v) = (0..n).find(|&v| bags_of[v].is_empty()) {
        return Err(TdViolation::VertexUncovered(v));
    }
    for &(u, v) in edges {
        if u == v {
            continue;
        }
        let (small, other) = if bags_of[u].len() <= bags_of[v].len() {
            (u, v)
        } else {
            (v, u)
        };
        if !bags_of[small]
            .iter()
            .any(|&i| td.bags[i].binary_search(&other).is_ok())
        {
            return Err(TdViolation::EdgeUncovered(u, v));
        }
    }
    // a subforest of a tree is connected iff it has one edge fewer than nodes
    let mut tree_edges_in = vec![0usize; n];
    for &(a, b) in &td.edges {
        let (ba, bb) = (&td.bags[a], &td.bags[b]);
        let (mut i, mut j) = (0, 0);
        while i < ba.len() && j < bb.len() {
            match ba[i].cmp(&bb[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    tree_edges_in[ba[i]] += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    if let Some(v) = (0..n).find(|&v| tree_edges_in[v] + 1 != bags_of[v].len()) {
        return Err(TdViolation::DisconnectedOccurrence(v));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> DirectedGraph {
        DirectedGraph::new(3, vec![(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn single_edge_incidence_row() {
        let g = DirectedGraph::new(2, vec![(0, 1)]).unwrap();
        let b = incidence_matrix(&g).to_dense();
        assert_eq!(b.row(0).iter().copied().collect::<Vec<_>>(), vec![-1.0, 1.0]);
    }

    #[test]
    fn triangle_btb_is_laplacian() {
        let g = DirectedGraph::new(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        let b = incidence_matrix(&g).to_dense();
        let l = b.transpose() * &b;
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l[(i, j)], if i == j { 2.0 } else { -1.0 });
            }
        }
    }

    #[test]
    fn p3_laplacian() {
        let l = weighted_laplacian(&p3(), &[1.0, 1.0]).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[1., -1., 0., -1., 2., -1., 0., -1., 1.]);
        assert_eq!(l, expected);
        let b = incidence_matrix(&p3()).to_dense();
        assert_eq!(b.transpose() * &b, expected);
    }

    #[test]
    fn single_edge_weighted_laplacian() {
        let g = DirectedGraph::new(2, vec![(0, 1)]).unwrap();
        let l = weighted_laplacian(&g, &[5.0]).unwrap();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[5., -5., -5., 5.]));
    }

    #[test]
    fn nonpositive_weight_rejected() {
        assert!(matches!(
            weighted_laplacian(&p3(), &[1.0, 0.0]),
            Err(Error::NonpositiveWeight { edge: 1, .. })
        ));
    }

    #[test]
    fn self_loops_rejected() {
        assert!(DirectedGraph::new(2, vec![(1, 1)]).is_err());
    }

    #[test]
    fn unbalanced_demand_rejected() {
        let g = DirectedGraph::new(2, vec![(0, 1)]).unwrap();
        assert!(matches!(
            FlowInstance::new(g, vec![-1, 2], vec![1], vec![0]),
            Err(Error::UnbalancedDemand(1))
        ));
    }

    #[test]
    fn td_p3_valid() {
        let td = TreeDecomposition::new(vec![vec![0, 1], vec![1, 2]], vec![(0, 1)]);
        assert_eq!(validate_tree_decomposition(3, p3().edges(), &td), Ok(()));
        assert_eq!(td.width(), 1);
        assert_eq!(td.size(), 4);
    }

    #[test]
    fn td_triangle_uncovered_edge() {
        let td = TreeDecomposition::new(vec![vec![0, 1], vec![1, 2]], vec![(0, 1)]);
        assert_eq!(
            validate_tree_decomposition(3, &[(0, 1), (1, 2), (2, 0)], &td),
            Err(TdViolation::EdgeUncovered(2, 0))
        );
    }

    #[test]
    fn td_disconnected_occurrence() {
        // path of bags {0,1} - {0,2} - {1,2}: vertex 1 at both ends only
        let td = TreeDecomposition::new(
            vec![vec![0, 1], vec![0, 2], vec![1, 2]],
            vec![(0, 1), (1, 2)],
        );
        assert_eq!(
            validate_tree_decomposition(3, &[(0, 1)], &td),
            Err(TdViolation::DisconnectedOccurrence(1))
        );
    }

    #[test]
    fn td_not_a_tree() {
        let td = TreeDecomposition::new(vec![vec![0], vec![1]], vec![]);
        assert_eq!(
            validate_tree_decomposition(2, &[], &td),
            Err(TdViolation::NotATree)
        );
    }

    #[test]
    fn flow_to_lp_maps_fields() {
        let g = DirectedGraph::new(2, vec![(0, 1), (0, 1)]).unwrap();
        let inst = FlowInstance::new(g, vec![-1, 1], vec![1, 1], vec![1, 2]).unwrap();
        let lp = flow_to_lp(&inst).unwrap();
        assert_eq!(lp.b, vec![-1.0, 1.0]);
        assert_eq!(lp.l, vec![0.0, 0.0]);
        assert_eq!(lp.u, vec![1.0, 1.0]);
        assert_eq!(lp.c, vec![1.0, 2.0]);
        assert_eq!(lp.bt_mul(&[1.0, 0.0]), lp.b);
    }
}
