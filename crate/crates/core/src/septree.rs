//! Separator trees: a binary recursion of the graph into edge-disjoint
//! regions, built from a tree decomposition.
//!
//! Every node `H` carries its edge set `E(H)`, vertex set `V(H)` (endpoints of
//! `E(H)`), boundary `∂H` (vertices of `H` with an incident edge outside
//! `E(H)`), separator `S(H) = V(H1) ∩ V(H2)` at internal nodes, and the set
//! `F_H` of vertices eliminated at `H`.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::graph::{validate_tree_decomposition, TreeDecomposition};

/// How a node's edge set was split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Leaf,
    /// Split along a balanced vertex separator taken from a bag.
    Separator,
    /// Plain halving of the edge list.
    Halving,
}

#[derive(Debug, Clone)]
pub struct SepNode {
    pub id: usize,
    pub level: usize,
    pub parent: Option<usize>,
    pub children: Option<(usize, usize)>,
    pub kind: NodeKind,
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
    pub boundary: Vec<usize>,
    pub separator: Vec<usize>,
    pub eliminated: Vec<usize>,
}

impl SepNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    /// `F_H` followed by `∂H`: the index set of the node's local matrices.
    pub fn local_vertices(&self) -> Vec<usize> {
        let mut v = self.eliminated.clone();
        v.extend_from_slice(&self.boundary);
        v
    }
}

/// Construction counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub separator_splits: usize,
    pub halving_splits: usize,
    /// Separator attempts rejected by the balance or potential checks.
    pub separator_fallbacks: usize,
}

#[derive(Debug, Clone)]
pub struct SeparatorTree {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub nodes: Vec<SepNode>,
    pub root: usize,
    pub height: usize,
    pub tau: usize,
    pub leaf_threshold: usize,
    /// Leaf node ids in left-to-right order; their edge sets are the blocks.
    pub leaves: Vec<usize>,
    pub leaf_of_edge: Vec<usize>,
    pub elim_node: Vec<usize>,
    pub stats: BuildStats,
}

/// A vertex separation `(A, S, B)` of a region together with decompositions
/// of `A ∪ S` and `B ∪ S`.
#[derive(Debug, Clone)]
pub struct Separation {
    pub a: Vec<usize>,
    pub s: Vec<usize>,
    pub b: Vec<usize>,
    /// Bag of the decomposition containing `s`.
    pub bag: usize,
    pub td_a: TreeDecomposition,
    pub td_b: TreeDecomposition,
}

/// Drops empty bags, hooking every remaining bag to its nearest nonempty
/// ancestor. Occurrence subtrees stay connected because their non-top bags
/// keep their parents.
pub fn compact_decomposition(td: &TreeDecomposition) -> TreeDecomposition {
    let k = td.bags.len();
    let Some(root) = (0..k).find(|&i| !td.bags[i].is_empty()) else {
        return TreeDecomposition::new(vec![vec![]], vec![]);
    };
    let adj = td.adjacency();
    let mut new_id = vec![usize::MAX; k];
    let mut bags = Vec::new();
    let mut edges = Vec::new();
    // (bag, nearest nonempty ancestor in new ids)
    let mut stack = vec![(root, usize::MAX, usize::MAX)];
    let mut seen = vec![false; k];
    seen[root] = true;
    while let Some((x, parent_new, _)) = stack.pop() {
        let mut anchor = parent_new;
        if !td.bags[x].is_empty() {
            new_id[x] = bags.len();
            bags.push(td.bags[x].clone());
            if parent_new != usize::MAX {
                edges.push((parent_new, new_id[x]));
            }
            anchor = new_id[x];
        }
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                stack.push((y, anchor, x));
            }
        }
    }
    TreeDecomposition { bags, edges }
}

fn sorted_union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v = a.to_vec();
    v.extend_from_slice(b);
    v.sort_unstable();
    v.dedup();
    v
}

fn sorted_intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn sorted_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_err()).collect()
}

/// Centroid bag under home-bag vertex weights (each vertex counts at the
/// bag closest to bag 0 that holds it). Ties go to the smallest bag id.
fn centroid_bag(td: &TreeDecomposition, n_total: usize, vertices: &[usize]) -> usize {
    let k = td.bags.len();
    let adj = td.adjacency();
    let mut order = Vec::with_capacity(k);
    let mut parent = vec![usize::MAX; k];
    let mut seen = vec![false; k];
    seen[0] = true;
    order.push(0);
    let mut i = 0;
    while i < order.len() {
        let x = order[i];
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                parent[y] = x;
                order.push(y);
            }
        }
        i += 1;
    }
    let mut homed = vec![false; n_total];
    let mut weight = vec![0usize; k];
    for &x in &order {
        for &v in &td.bags[x] {
            if !homed[v] {
                homed[v] = true;
                weight[x] += 1;
            }
        }
    }
    let total: usize = vertices.len();
    let mut sub = weight.clone();
    for &x in order.iter().rev() {
        if parent[x] != usize::MAX {
            sub[parent[x]] += sub[x];
        }
    }
    (0..k)
        .find(|&c| {
            let mut heaviest = total - sub[c];
            for &y in &adj[c] {
                if parent[y] == c {
                    heaviest = heaviest.max(sub[y]);
                }
            }
            2 * heaviest <= total
        })
        .unwrap_or(0)
}

/// Components of the region after deleting `s`, as sorted vertex lists.
fn components_without(
    n_total: usize,
    vertices: &[usize],
    edges: &[(usize, usize)],
    s: &[usize],
) -> Vec<Vec<usize>> {
    let mut removed = vec![false; n_total];
    for &v in s {
        removed[v] = true;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_total];
    for &(a, b) in edges {
        if !removed[a] && !removed[b] {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = removed;
    let mut comps = Vec::new();
    for &v in vertices {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        let mut comp = vec![v];
        let mut i = 0;
        while i < comp.len() {
            for &y in &adj[comp[i]] {
                if !seen[y] {
                    seen[y] = true;
                    comp.push(y);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

fn group_components(mut comps: Vec<Vec<usize>>) -> (Vec<usize>, Vec<usize>) {
    comps.sort_by(|x, y| y.len().cmp(&x.len()).then(x[0].cmp(&y[0])));
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for c in comps {
        if a.len() <= b.len() {
            a.extend(c);
        } else {
            b.extend(c);
        }
    }
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

/// Finds a balanced vertex separation of the region spanned by `edges`
/// (with vertex set `vertices`) from a decomposition of it.
///
/// The separator is drawn from the centroid bag. Vertices held by that bag
/// alone are dropped from it first when the result stays balanced.
pub fn find_balanced_separator(
    n_total: usize,
    vertices: &[usize],
    edges: &[(usize, usize)],
    td: &TreeDecomposition,
) -> Result<Separation> {
    let mut vs = vertices.to_vec();
    vs.sort_unstable();
    vs.dedup();
    let mut local_index = vec![usize::MAX; n_total];
    for (i, &v) in vs.iter().enumerate() {
        local_index[v] = i;
    }
    // validate on local ids so the check is proportional to the region
    let local_td = TreeDecomposition {
        bags: td
            .bags
            .iter()
            .map(|b| {
                b.iter()
                    .map(|&v| *local_index.get(v).filter(|&&i| i != usize::MAX).unwrap_or(&vs.len()))
                    .collect()
            })
            .collect(),
        edges: td.edges.clone(),
    };
    let local_edges: Vec<_> = edges
        .iter()
        .map(|&(a, b)| (local_index[a], local_index[b]))
        .collect();
    validate_tree_decomposition(vs.len(), &local_edges, &local_td)?;

    let bag = centroid_bag(td, n_total, &vs);
    let full = td.bags[bag].clone();
    let limit = 2 * vs.len();
    let balanced = |a: &[usize], b: &[usize]| 3 * a.len() <= limit && 3 * b.len() <= limit;

    let mut occurrences = std::collections::HashMap::new();
    for b in &td.bags {
        for &v in b {
            *occurrences.entry(v).or_insert(0usize) += 1;
        }
    }
    let pruned: Vec<usize> = full
        .iter()
        .copied()
        .filter(|v| occurrences.get(v).copied().unwrap_or(0) > 1)
        .collect();

    let mut choice = None;
    if pruned.len() < full.len() {
        let (a, b) = group_components(components_without(n_total, &vs, edges, &pruned));
        if balanced(&a, &b) {
            choice = Some((a, pruned, b));
        }
    }
    let (a, s, b) = match choice {
        Some(c) => c,
        None => {
            let (a, b) = group_components(components_without(n_total, &vs, edges, &full));
            (a, full, b)
        }
    };
    let mut keep_a = vec![false; n_total];
    let mut keep_b = vec![false; n_total];
    for &v in a.iter().chain(&s) {
        keep_a[v] = true;
    }
    for &v in b.iter().chain(&s) {
        keep_b[v] = true;
    }
    Ok(Separation {
        td_a: compact_decomposition(&td.restrict(&keep_a)),
        td_b: compact_decomposition(&td.restrict(&keep_b)),
        a,
        s,
        b,
        bag,
    })
}

struct Pending {
    edges: Vec<usize>,
    td: TreeDecomposition,
    level: usize,
    parent: Option<usize>,
    slot: usize,
}

impl SeparatorTree {
    /// Builds the tree. Leaves hold at most `leaf_threshold` edges (at least
    /// 1). `tau` is the width of `td`.
    pub fn build(
        n: usize,
        edges: &[(usize, usize)],
        td: &TreeDecomposition,
        leaf_threshold: usize,
    ) -> Result<Self> {
        validate_tree_decomposition(n, edges, td)?;
        let tau = td.width();
        let leaf_threshold = leaf_threshold.max(1);
        let m = edges.len();
        let mut deg = vec![0usize; n];
        for &(a, b) in edges {
            deg[a] += 1;
            if a != b {
                deg[b] += 1;
            }
        }
        let mut tree = SeparatorTree {
            n,
            edges: edges.to_vec(),
            nodes: Vec::new(),
            root: 0,
            height: 0,
            tau,
            leaf_threshold,
            leaves: Vec::new(),
            leaf_of_edge: vec![usize::MAX; m],
            elim_node: vec![usize::MAX; n],
            stats: BuildStats::default(),
        };
        let mut local_deg = vec![0usize; n];
        let mut stack = vec![Pending {
            edges: (0..m).collect(),
            td: compact_decomposition(td),
            level: 0,
            parent: None,
            slot: 0,
        }];
        while let Some(p) = stack.pop() {
            let id = tree.nodes.len();
            if let Some(par) = p.parent {
                let ch = tree.nodes[par].children.get_or_insert((usize::MAX, usize::MAX));
                if p.slot == 0 {
                    ch.0 = id;
                } else {
                    ch.1 = id;
                }
            }
            let mut vertices: Vec<usize> = p
                .edges
                .iter()
                .flat_map(|&e| [edges[e].0, edges[e].1])
                .collect();
            vertices.sort_unstable();
            vertices.dedup();
            for &e in &p.edges {
                let (a, b) = edges[e];
                local_deg[a] += 1;
                if a != b {
                    local_deg[b] += 1;
                }
            }
            let boundary: Vec<usize> = vertices
                .iter()
                .copied()
                .filter(|&v| local_deg[v] < deg[v])
                .collect();
            for &v in &vertices {
                local_deg[v] = 0;
            }
            tree.height = tree.height.max(p.level);
            let mut node = SepNode {
                id,
                level: p.level,
                parent: p.parent,
                children: None,
                kind: NodeKind::Leaf,
                edges: p.edges,
                vertices,
                boundary,
                separator: Vec::new(),
                eliminated: Vec::new(),
            };
            if node.edges.len() <= leaf_threshold {
                node.eliminated = sorted_difference(&node.vertices, &node.boundary);
                tree.nodes.push(node);
                continue;
            }
            let (kind, e1, e2, td1, td2) = tree.split(&node, &p.td);
            node.kind = kind;
            let v1 = endpoint_set(edges, &e1);
            let v2 = endpoint_set(edges, &e2);
            node.separator = sorted_intersection(&v1, &v2);
            node.eliminated = sorted_difference(&node.separator, &node.boundary);
            node.children = Some((usize::MAX, usize::MAX));
            tree.nodes.push(node);
            // right child pushed first so the left subtree is numbered first
            stack.push(Pending {
                edges: e2,
                td: td2,
                level: p.level + 1,
                parent: Some(id),
                slot: 1,
            });
            stack.push(Pending {
                edges: e1,
                td: td1,
                level: p.level + 1,
                parent: Some(id),
                slot: 0,
            });
        }

        for node in &tree.nodes {
            if node.is_leaf() {
                tree.leaves.push(node.id);
                for &e in &node.edges {
                    tree.leaf_of_edge[e] = node.id;
                }
            }
            for &v in &node.eliminated {
                tree.elim_node[v] = node.id;
            }
        }
        // isolated vertices are eliminated at the root
        let isolated: Vec<usize> = (0..n).filter(|&v| deg[v] == 0).collect();
        if !isolated.is_empty() {
            let root = &mut tree.nodes[0];
            root.eliminated = sorted_union(&root.eliminated, &isolated);
            for v in isolated {
                tree.elim_node[v] = 0;
            }
        }
        Ok(tree)
    }

    fn split(
        &mut self,
        node: &SepNode,
        td: &TreeDecomposition,
    ) -> (NodeKind, Vec<usize>, Vec<usize>, TreeDecomposition, TreeDecomposition) {
        let edges = &self.edges;
        if node.vertices.len() > 2 * self.tau {
            let local: Vec<(usize, usize)> = node.edges.iter().map(|&e| edges[e]).collect();
            if let Ok(sep) = find_balanced_separator(self.n, &node.vertices, &local, td) {
                let mut side = vec![0u8; self.n];
                for &v in &sep.a {
                    side[v] = 1;
                }
                for &v in &sep.b {
                    side[v] = 2;
                }
                let (mut e1, mut e2) = (Vec::new(), Vec::new());
                for &e in &node.edges {
                    let (a, b) = edges[e];
                    match side[a].max(side[b]) {
                        1 => e1.push(e),
                        2 => e2.push(e),
                        _ => {
                            if e1.len() <= e2.len() {
                                e1.push(e)
                            } else {
                                e2.push(e)
                            }
                        }
                    }
                }
                if self.split_is_good(node, &e1, &e2) {
                    self.stats.separator_splits += 1;
                    let (t1, t2) = (self.restrict_to(td, &e1), self.restrict_to(td, &e2));
                    return (NodeKind::Separator, e1, e2, t1, t2);
                }
                self.stats.separator_fallbacks += 1;
            }
        }
        self.stats.halving_splits += 1;
        let half = node.edges.len().div_ceil(2);
        let e1 = node.edges[..half].to_vec();
        let e2 = node.edges[half..].to_vec();
        let (t1, t2) = (self.restrict_to(td, &e1), self.restrict_to(td, &e2));
        (NodeKind::Halving, e1, e2, t1, t2)
    }

    fn restrict_to(&self, td: &TreeDecomposition, es: &[usize]) -> TreeDecomposition {
        let mut keep = vec![false; self.n];
        for &e in es {
            keep[self.edges[e].0] = true;
            keep[self.edges[e].1] = true;
        }
        compact_decomposition(&td.restrict(&keep))
    }

    fn split_is_good(&self, node: &SepNode, e1: &[usize], e2: &[usize]) -> bool {
        if e1.is_empty() || e2.is_empty() {
            return false;
        }
        let v1 = endpoint_set(&self.edges, e1);
        let v2 = endpoint_set(&self.edges, e2);
        let s = sorted_intersection(&v1, &v2);
        let (nv, ne) = (node.vertices.len(), node.edges.len());
        let balanced = |vi: &[usize]| 3 * (vi.len() - s.len()) <= 2 * nv;
        let potential = |vi: &[usize], ei: &[usize]| 3 * vi.len() * ei.len() <= 2 * nv * ne;
        balanced(&v1) && balanced(&v2) && potential(&v1, e1) && potential(&v2, e2)
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: usize) -> &SepNode {
        &self.nodes[id]
    }

    /// Leaf edge sets in leaf order.
    pub fn leaf_blocks(&self) -> Vec<Vec<usize>> {
        self.leaves.iter().map(|&l| self.nodes[l].edges.clone()).collect()
    }

    /// Block index of every edge (position of its leaf in `leaves`).
    pub fn block_of_edge(&self) -> Vec<usize> {
        let mut pos = vec![0; self.nodes.len()];
        for (i, &l) in self.leaves.iter().enumerate() {
            pos[l] = i;
        }
        self.leaf_of_edge.iter().map(|&l| pos[l]).collect()
    }

    /// `node`, its parent, ..., the root.
    pub fn path_to_root(&self, node: usize) -> Vec<usize> {
        let mut path = vec![node];
        let mut x = node;
        while let Some(p) = self.nodes[x].parent {
            path.push(p);
            x = p;
        }
        path
    }

    /// All nodes whose edge set meets `changed`, in increasing id order.
    pub fn nodes_touched_by(&self, changed: &[usize]) -> Result<Vec<usize>> {
        let mut mark = vec![false; self.nodes.len()];
        for &e in changed {
            let leaf = *self.leaf_of_edge.get(e).ok_or(Error::UnknownEdge(e))?;
            let mut x = leaf;
            loop {
                if mark[x] {
                    break;
                }
                mark[x] = true;
                match self.nodes[x].parent {
                    Some(p) => x = p,
                    None => break,
                }
            }
        }
        Ok((0..self.nodes.len()).filter(|&i| mark[i]).collect())
    }

    /// Node ids grouped by level, root level first.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.height + 1];
        for node in &self.nodes {
            out[node.level].push(node.id);
        }
        out
    }

    /// `max_H |F_H ∪ ∂H|`.
    pub fn max_local_size(&self) -> usize {
        self.nodes
            .iter()
            .map(|h| h.eliminated.len() + h.boundary.len())
            .max()
            .unwrap_or(0)
    }

    /// Line-oriented dump: `node <id> level <l> edges <|E|> boundary .. sep .. elim ..`.
    pub fn dump(&self) -> String {
        let list = |v: &[usize]| {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        };
        let mut out = String::new();
        for h in &self.nodes {
            let _ = writeln!(
                out,
                "node {} level {} edges {} boundary [{}] sep [{}] elim [{}]",
                h.id,
                h.level,
                h.edges.len(),
                list(&h.boundary),
                list(&h.separator),
                list(&h.eliminated)
            );
        }
        out
    }

    /// Checks every structural clause of a separator tree against the graph.
    pub fn validate(&self) -> Result<(), SepTreeViolation> {
        use SepTreeViolation as V;
        let m = self.edges.len();
        let mut deg = vec![0usize; self.n];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            if a != b {
                deg[b] += 1;
            }
        }
        let root = &self.nodes[self.root];
        if root.parent.is_some() || root.edges.len() != m {
            return Err(V::BadRoot);
        }
        let mut elim_count = vec![0usize; self.n];
        let mut in_leaf = vec![0usize; m];
        let mut local_deg = vec![0usize; self.n];
        for h in &self.nodes {
            let vertices = endpoint_set(&self.edges, &h.edges);
            if vertices != h.vertices {
                return Err(V::VertexSet(h.id));
            }
            for &e in &h.edges {
                let (a, b) = self.edges[e];
                local_deg[a] += 1;
                if a != b {
                    local_deg[b] += 1;
                }
            }
            let boundary: Vec<usize> = h
                .vertices
                .iter()
                .copied()
                .filter(|&v| local_deg[v] < deg[v])
                .collect();
            for &v in &h.vertices {
                local_deg[v] = 0;
            }
            if boundary != h.boundary {
                return Err(V::Boundary(h.id));
            }
            for &v in &h.eliminated {
                elim_count[v] += 1;
            }
            match h.children {
                None => {
                    if h.edges.len() > self.leaf_threshold {
                        return Err(V::OversizedLeaf(h.id));
                    }
                    for &e in &h.edges {
                        in_leaf[e] += 1;
                    }
                    let mut expect = sorted_difference(&h.vertices, &h.boundary);
                    if h.id == self.root {
                        let iso: Vec<usize> = (0..self.n).filter(|&v| deg[v] == 0).collect();
                        expect = sorted_union(&expect, &iso);
                    }
                    if expect != h.eliminated {
                        return Err(V::Eliminated(h.id));
                    }
                }
                Some((c1, c2)) => {
                    let (h1, h2) = (&self.nodes[c1], &self.nodes[c2]);
                    if h1.parent != Some(h.id) || h2.parent != Some(h.id) {
                        return Err(V::Structure(h.id));
                    }
                    if h1.level != h.level + 1 || h2.level != h.level + 1 {
                        return Err(V::Structure(h.id));
                    }
                    let joined = sorted_union(&h1.edges, &h2.edges);
                    let mut own = h.edges.clone();
                    own.sort_unstable();
                    if joined.len() != h1.edges.len() + h2.edges.len() || joined != own {
                        return Err(V::ChildPartition(h.id));
                    }
                    if h1.edges.is_empty() || h2.edges.is_empty() {
                        return Err(V::ChildPartition(h.id));
                    }
                    let s = sorted_intersection(&h1.vertices, &h2.vertices);
                    if s != h.separator {
                        return Err(V::Separator(h.id));
                    }
                    let mut expect = sorted_difference(&s, &h.boundary);
                    if h.id == self.root {
                        let iso: Vec<usize> = (0..self.n).filter(|&v| deg[v] == 0).collect();
                        expect = sorted_union(&expect, &iso);
                    }
                    if expect != h.eliminated {
                        return Err(V::Eliminated(h.id));
                    }
                }
            }
        }
        if let Some(e) = (0..m).find(|&e| in_leaf[e] != 1) {
            return Err(V::LeafPartition(e));
        }
        if let Some(v) = (0..self.n).find(|&v| elim_count[v] != 1) {
            return Err(V::EliminationPartition(v));
        }
        Ok(())
    }

    /// Worst ratio over separator splits of `|V(Hi) \ S(H)| / |V(H)|`.
    pub fn worst_balance(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for h in &self.nodes {
            if let (Some((c1, c2)), NodeKind::Separator) = (h.children, h.kind) {
                for c in [c1, c2] {
                    let outside = self.nodes[c].vertices.len() - h.separator.len();
                    worst = worst.max(outside as f64 / h.vertices.len() as f64);
                }
            }
        }
        worst
    }

    /// Worst ratio over internal nodes of `|V(Hi)||E(Hi)| / (|V(H)||E(H)|)`.
    pub fn worst_potential(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for h in &self.nodes {
            if let Some((c1, c2)) = h.children {
                let p = (h.vertices.len() * h.edges.len()) as f64;
                for c in [c1, c2] {
                    let ch = &self.nodes[c];
                    worst = worst.max((ch.vertices.len() * ch.edges.len()) as f64 / p);
                }
            }
        }
        worst
    }
}

fn endpoint_set(edges: &[(usize, usize)], ids: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = ids.iter().flat_map(|&e| [edges[e].0, edges[e].1]).collect();
    v.sort_unstable();
    v.dedup();
    v
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SepTreeViolation {
    BadRoot,
    Structure(usize),
    VertexSet(usize),
    Boundary(usize),
    OversizedLeaf(usize),
    ChildPartition(usize),
    Separator(usize),
    Eliminated(usize),
    LeafPartition(usize),
    EliminationPartition(usize),
}

impl fmt::Display for SepTreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use SepTreeViolation::*;
        match self {
            BadRoot => write!(f, "root must have no parent and hold every edge"),
            Structure(h) => write!(f, "node {h}: parent/level links inconsistent"),
            VertexSet(h) => write!(f, "node {h}: vertex set differs from edge endpoints"),
            Boundary(h) => write!(f, "node {h}: boundary differs from recomputed boundary"),
            OversizedLeaf(h) => write!(f, "leaf {h} exceeds the leaf threshold"),
            ChildPartition(h) => write!(f, "node {h}: children do not partition its edges"),
            Separator(h) => write!(f, "node {h}: separator is not V(H1) ∩ V(H2)"),
            Eliminated(h) => write!(f, "node {h}: eliminated set is wrong"),
            LeafPartition(e) => write!(f, "edge {e} is not in exactly one leaf"),
            EliminationPartition(v) => write!(f, "vertex {v} is not eliminated exactly once"),
        }
    }
}

impl std::error::Error for SepTreeViolation {}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_td(n: usize) -> TreeDecomposition {
        TreeDecomposition::new(
            (0..n - 1).map(|i| vec![i, i + 1]).collect(),
            (0..n.saturating_sub(2)).map(|i| (i, i + 1)).collect(),
        )
    }

    #[test]
    fn p3_separator() {
        let sep = find_balanced_separator(3, &[0, 1, 2], &[(0, 1), (1, 2)], &path_td(3)).unwrap();
        assert_eq!((sep.a, sep.s, sep.b), (vec![0], vec![1], vec![2]));
    }

    #[test]
    fn k3_single_bag_is_its_own_separator() {
        let td = TreeDecomposition::trivial(3);
        let sep = find_balanced_separator(3, &[0, 1, 2], &[(0, 1), (1, 2), (2, 0)], &td).unwrap();
        assert_eq!(sep.s, vec![0, 1, 2]);
        assert!(sep.a.is_empty() && sep.b.is_empty());
    }

    #[test]
    fn p7_centroid_bag() {
        let edges: Vec<_> = (0..6).map(|i| (i, i + 1)).collect();
        let sep = find_balanced_separator(7, &(0..7).collect::<Vec<_>>(), &edges, &path_td(7)).unwrap();
        assert_eq!(sep.bag, 2);
        assert_eq!(sep.s, vec![2, 3]);
        assert!(sep.a.len() <= 4 && sep.b.len() <= 4);
    }

    #[test]
    fn single_edge_tree() {
        let t = SeparatorTree::build(2, &[(0, 1)], &TreeDecomposition::trivial(2), 4).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.nodes[0].eliminated, vec![0, 1]);
        assert!(t.nodes[0].boundary.is_empty());
        t.validate().unwrap();
    }

    #[test]
    fn c4_tree() {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 0)];
        let td = TreeDecomposition::new(vec![vec![0, 1, 2], vec![0, 2, 3]], vec![(0, 1)]);
        let t = SeparatorTree::build(4, &edges, &td, 1).unwrap();
        t.validate().unwrap();
        assert!(t.height <= 3);
        let mut all: Vec<usize> = t.leaf_blocks().concat();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3]);
    }

    #[test]
    fn touched_paths() {
        let edges: Vec<_> = (0..15).map(|i| (i, i + 1)).collect();
        let t = SeparatorTree::build(16, &edges, &path_td(16), 1).unwrap();
        t.validate().unwrap();
        assert!(t.nodes_touched_by(&[]).unwrap().is_empty());
        let one = t.nodes_touched_by(&[5]).unwrap();
        let mut path = t.path_to_root(t.leaf_of_edge[5]);
        path.sort_unstable();
        assert_eq!(one, path);
        assert!(one.len() <= t.height + 1);
        let all: Vec<usize> = (0..15).collect();
        assert_eq!(t.nodes_touched_by(&all).unwrap().len(), t.nodes.len());
        assert!(matches!(t.nodes_touched_by(&[99]), Err(Error::UnknownEdge(99))));
    }

    #[test]
    fn validator_catches_double_elimination() {
        let edges: Vec<_> = (0..7).map(|i| (i, i + 1)).collect();
        let mut t = SeparatorTree::build(8, &edges, &path_td(8), 1).unwrap();
        let leaf = t.leaves[0];
        let v = t.nodes[0].eliminated.first().copied().unwrap_or(0);
        t.nodes[leaf].eliminated.push(v);
        assert!(t.validate().is_err());
    }

    #[test]
    fn validator_catches_bad_separator() {
        let edges: Vec<_> = (0..7).map(|i| (i, i + 1)).collect();
        let mut t = SeparatorTree::build(8, &edges, &path_td(8), 1).unwrap();
        t.nodes[0].separator.clear();
        assert!(matches!(t.validate(), Err(SepTreeViolation::Separator(0))));
    }

    #[test]
    fn isolated_vertices_go_to_root() {
        let t = SeparatorTree::build(4, &[(0, 1)], &TreeDecomposition::new(vec![vec![0, 1], vec![2], vec![3]], vec![(0, 1), (1, 2)]), 4).unwrap();
        assert_eq!(t.elim_node[3], t.root);
        t.validate().unwrap();
    }

    #[test]
    fn compaction_keeps_validity() {
        let td = TreeDecomposition::new(vec![vec![0, 1], vec![], vec![1, 2]], vec![(0, 1), (1, 2)]);
        let c = compact_decomposition(&td);
        assert_eq!(c.bags.len(), 2);
        assert_eq!(validate_tree_decomposition(3, &[(0, 1), (1, 2)], &c), Ok(()));
    }
}
