use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twflow::gen;
use twflow::graph::weighted_laplacian;
use twflow::graph::DirectedGraph;
use twflow::nested_dissection::{NdFactorization, SchurMode};
use twflow::oracle;
use twflow::septree::SeparatorTree;
use twflow::solution::{MaintainConfig, SolutionState};

struct Case {
    n: usize,
    arcs: Vec<(usize, usize)>,
    tree: SeparatorTree,
    w: Vec<f64>,
}

fn case(n: usize, k: usize, seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gen::ktree(n, k, &mut rng);
    let arcs: Vec<(usize, usize)> =
        g.edges.iter().map(|&(a, b)| if rng.gen_bool(0.5) { (a, b) } else { (b, a) }).collect();
    let w = arcs.iter().map(|_| 10f64.powf(rng.gen_range(-1.5..1.5))).collect();
    let tree = SeparatorTree::build(g.n, &arcs, &g.td, 4 * k).unwrap();
    Case { n: g.n, arcs, tree, w }
}

fn dense(c: &Case) -> Vec<Vec<f64>> {
    let l = weighted_laplacian(&DirectedGraph::new(c.n, c.arcs.clone()).unwrap(), &c.w).unwrap();
    (0..c.n).map(|i| (0..c.n).map(|j| l[(i, j)]).collect()).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn separator_tree_is_sound(n in 3usize..80, k in 1usize..4, seed in any::<u64>()) {
        let c = case(n, k, seed);
        prop_assert!(c.tree.validate().is_ok());
        prop_assert!(c.tree.worst_balance() <= 2.0 / 3.0 + 1e-12);
        // leaf blocks partition the edges
        let mut seen = vec![0; c.arcs.len()];
        for block in c.tree.leaf_blocks() {
            for e in block {
                seen[e] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&x| x == 1));
    }

    #[test]
    fn nested_dissection_matches_dense(n in 3usize..30, k in 1usize..4, seed in any::<u64>()) {
        let c = case(n, k, seed);
        let nd = NdFactorization::initialize(c.tree.clone(), &c.w, SchurMode::Exact).unwrap();
        let mut b: Vec<f64> = (0..c.n).map(|i| ((seed as usize + i) % 7) as f64 - 3.0).collect();
        let mean = b.iter().sum::<f64>() / c.n as f64;
        b.iter_mut().for_each(|x| *x -= mean);
        let x = nd.apply_inverse(&b).unwrap();
        let want = oracle::dense_pinv_solve(&dense(&c), &b);
        let scale = want.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        prop_assert!(max_abs_diff(&x, &want) <= 1e-9 * scale);
        prop_assert!(max_abs_diff(&nd.apply_laplacian(&x), &b) <= 1e-9 * scale);

        // the projection is idempotent and matches the dense one
        let v: Vec<f64> = (0..c.arcs.len()).map(|e| ((e * 31 + seed as usize) % 11) as f64 - 5.0).collect();
        let p = nd.project(&v).unwrap();
        let pp = nd.project(&p).unwrap();
        prop_assert!(max_abs_diff(&p, &pp) <= 1e-9 * 5.0);
        prop_assert!(max_abs_diff(&p, &oracle::dense_projection(c.n, &c.arcs, &c.w, &v)) <= 1e-9 * 5.0);
    }

    #[test]
    fn maintained_moves_keep_contracts(n in 4usize..30, k in 1usize..4, seed in any::<u64>()) {
        let c = case(n, k, seed);
        let m = c.arcs.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let cfg = MaintainConfig { eps_bar: 0.1, beta: 0.1, schur: SchurMode::Exact, dense_mirror: true };
        let f0: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..1.5)).collect();
        let s0: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut st = SolutionState::initialize(&c.tree, &f0, &s0, &v, &c.w, cfg).unwrap();
        let inflow = |f: &[f64]| {
            let mut y = vec![0.0; c.n];
            for (e, &(t, h)) in c.arcs.iter().enumerate() {
                y[h] += f[e];
                y[t] -= f[e];
            }
            y
        };
        let b0 = inflow(&f0);
        for step in 0..12 {
            if step % 3 == 1 {
                let e = rng.gen_range(0..m);
                st.reweight(&[(e, c.w[e] * rng.gen_range(0.5..2.0))]).unwrap();
            }
            let changes: Vec<(usize, f64)> = (0..2).map(|_| (rng.gen_range(0..m), rng.gen_range(-1.0..1.0))).collect();
            let mut dir = st.direction().to_vec();
            for &(e, x) in &changes {
                dir[e] = x;
            }
            let h = 0.5 * cfg.beta / dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            st.move_step(h, &changes).unwrap();
            st.approximate().unwrap();
            let (f, s) = st.exact();
            prop_assert!(max_abs_diff(&inflow(&f), &b0) <= 1e-9 * (1.0 + b0.iter().fold(0.0f64, |a, x| a.max(x.abs()))));
            // the dual moved by a potential difference
            let ds: Vec<f64> = s.iter().zip(&s0).map(|(a, b)| a - b).collect();
            let ones = vec![1.0; m];
            let back = oracle::dense_projection(c.n, &c.arcs, &ones, &ds);
            prop_assert!(max_abs_diff(&back, &ds) <= 1e-8 * (1.0 + ds.iter().fold(0.0f64, |a, x| a.max(x.abs()))));
            let (df, dss) = st.deviation();
            prop_assert!(df <= cfg.eps_bar * (1.0 + 1e-9) && dss <= cfg.eps_bar * (1.0 + 1e-9));
            let (mf, ms) = st.mirror().unwrap();
            prop_assert!(max_abs_diff(&f, mf) <= 1e-8 * (1.0 + mf.iter().fold(0.0f64, |a, x| a.max(x.abs()))));
            prop_assert!(max_abs_diff(&s, ms) <= 1e-8 * (1.0 + ms.iter().fold(0.0f64, |a, x| a.max(x.abs()))));
        }
    }
}
