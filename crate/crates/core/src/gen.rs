//! Seeded generators for graphs of known treewidth and flow instances on
//! them.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{DirectedGraph, FlowInstance, TreeDecomposition};

/// An undirected graph with a tree decomposition witnessing its width.
#[derive(Debug, Clone)]
pub struct Decomposed {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub td: TreeDecomposition,
}

/// Random `k`-tree on `n` vertices (a clique when `n <= k + 1`). Each new
/// vertex attaches to a uniformly chosen existing `k`-clique.
pub fn ktree<R: Rng>(n: usize, k: usize, rng: &mut R) -> Decomposed {
    let base = n.min(k + 1);
    let mut edges = Vec::new();
    for a in 0..base {
        for b in a + 1..base {
            edges.push((a, b));
        }
    }
    let mut bags = vec![(0..base).collect::<Vec<_>>()];
    let mut tree = Vec::new();
    // (clique, bag that contains it)
    let mut cliques: Vec<(Vec<usize>, usize)> = Vec::new();
    if base == k + 1 {
        for skip in 0..base {
            let c: Vec<usize> = (0..base).filter(|&x| x != skip).collect();
            cliques.push((c, 0));
        }
    }
    for v in base..n {
        let (c, home) = cliques[rng.gen_range(0..cliques.len())].clone();
        for &x in &c {
            edges.push((x, v));
        }
        let mut bag = c.clone();
        bag.push(v);
        let id = bags.len();
        bags.push(bag);
        tree.push((home, id));
        for skip in 0..c.len() {
            let mut nc: Vec<usize> = c.iter().copied().filter(|&x| x != c[skip]).collect();
            nc.push(v);
            cliques.push((nc, id));
        }
        if k == 0 {
            break;
        }
    }
    if k == 0 {
        bags = (0..n).map(|v| vec![v]).collect();
        tree = (1..n).map(|v| (v - 1, v)).collect();
        edges.clear();
    }
    Decomposed {
        n,
        edges,
        td: TreeDecomposition::new(bags, tree),
    }
}

/// `rows x cols` grid with a path decomposition of width `min(rows, cols)`.
pub fn grid(rows: usize, cols: usize) -> Decomposed {
    let (r, c) = if cols <= rows { (rows, cols) } else { (cols, rows) };
    let id = |i: usize, j: usize| i * c + j;
    let mut edges = Vec::new();
    for i in 0..r {
        for j in 0..c {
            if j + 1 < c {
                edges.push((id(i, j), id(i, j + 1)));
            }
            if i + 1 < r {
                edges.push((id(i, j), id(i + 1, j)));
            }
        }
    }
    let n = r * c;
    let bags: Vec<Vec<usize>> = if n <= c + 1 {
        vec![(0..n).collect()]
    } else {
        (0..n - c).map(|s| (s..=s + c).collect()).collect()
    };
    let tree = (1..bags.len()).map(|i| (i - 1, i)).collect();
    Decomposed {
        n,
        edges,
        td: TreeDecomposition::new(bags, tree),
    }
}

/// Uniform random recursive tree.
pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> Decomposed {
    let mut edges = Vec::new();
    let mut bags = Vec::new();
    let mut tree = Vec::new();
    if n > 0 {
        bags.push(vec![0]);
    }
    for v in 1..n {
        let p = rng.gen_range(0..v);
        edges.push((p, v));
        bags.push(vec![p, v]);
        // bag of v's parent edge, or the root bag for vertex 0
        tree.push((p, v));
    }
    Decomposed {
        n,
        edges,
        td: TreeDecomposition::new(bags, tree),
    }
}

/// Path `0 - 1 - ... - (n-1)`.
pub fn path(n: usize) -> Decomposed {
    let edges = (1..n).map(|v| (v - 1, v)).collect();
    let bags: Vec<Vec<usize>> = if n <= 1 {
        vec![(0..n).collect()]
    } else {
        (1..n).map(|v| vec![v - 1, v]).collect()
    };
    let tree = (1..bags.len()).map(|i| (i - 1, i)).collect();
    Decomposed {
        n,
        edges,
        td: TreeDecomposition::new(bags, tree),
    }
}

/// Random flow instance on an undirected graph. Each edge becomes one arc in
/// a random direction (sometimes both), capacities lie in `1..=M`, costs in
/// `-M/4..=M`. With `feasible`, demands come from a random flow so the
/// instance has a solution; otherwise they come from random source and sink
/// pairs and may be unmeetable. All magnitudes stay within `M`.
pub fn flow_instance<R: Rng>(
    n: usize,
    edges: &[(usize, usize)],
    big_m: i64,
    feasible: bool,
    rng: &mut R,
) -> FlowInstance {
    let big_m = big_m.max(1);
    let mut arcs = Vec::new();
    for &(a, b) in edges {
        let roll: f64 = rng.gen();
        if roll < 0.15 {
            arcs.push((a, b));
            arcs.push((b, a));
        } else if roll < 0.575 {
            arcs.push((a, b));
        } else {
            arcs.push((b, a));
        }
    }
    let capacity: Vec<i64> = arcs.iter().map(|_| rng.gen_range(1..=big_m)).collect();
    let cost: Vec<i64> = arcs
        .iter()
        .map(|_| rng.gen_range(-(big_m / 4)..=big_m))
        .collect();
    let mut demand = vec![0i64; n];
    if feasible {
        let mut p = 0.4;
        loop {
            let mut d = vec![0i64; n];
            for (e, &(t, h)) in arcs.iter().enumerate() {
                if rng.gen::<f64>() < p {
                    let x = rng.gen_range(0..=capacity[e]);
                    d[h] += x;
                    d[t] -= x;
                }
            }
            if d.iter().all(|x| x.abs() <= big_m) {
                demand = d;
                break;
            }
            p *= 0.7;
        }
    } else if n >= 2 {
        let pairs = rng.gen_range(1..=3);
        let mut verts: Vec<usize> = (0..n).collect();
        for _ in 0..pairs {
            verts.shuffle(rng);
            let amount = rng.gen_range(1..=big_m);
            if (demand[verts[0]] - amount).abs() <= big_m && (demand[verts[1]] + amount).abs() <= big_m {
                demand[verts[0]] -= amount;
                demand[verts[1]] += amount;
            }
        }
    }
    FlowInstance::new(DirectedGraph::new(n, arcs).expect("valid arcs"), demand, capacity, cost)
        .expect("balanced instance")
}
