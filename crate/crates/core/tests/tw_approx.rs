use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use twflow::graph::validate_tree_decomposition;
use twflow::oracle::exact_treewidth;
use twflow::tw_approx::{
    balanced_vertex_separator, build_tree_decomposition, in_node, min_cut_between, min_fill_decomposition, out_node,
    vertex_to_edge_reduction, Dinic, IpmEngine, TwSettings, DEFAULT_BALANCE,
};

fn graph(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let len = pairs.len();
        (Just(n), prop::sample::subsequence(pairs, 0..=len))
    })
}

/// Whether some vertex of `a` reaches `b` once `sep` is removed.
fn connected_around(n: usize, edges: &[(usize, usize)], sep: &[usize], a: &[usize], b: &[usize]) -> bool {
    let mut blocked = vec![false; n];
    sep.iter().for_each(|&v| blocked[v] = true);
    let mut adj = vec![Vec::new(); n];
    for &(x, y) in edges {
        adj[x].push(y);
        adj[y].push(x);
    }
    let mut seen = vec![false; n];
    let mut queue: std::collections::VecDeque<usize> = a.iter().copied().filter(|&v| !blocked[v]).collect();
    queue.iter().for_each(|&v| seen[v] = true);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !blocked[w] && !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    b.iter().any(|&v| seen[v])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn separators_are_sound((n, edges) in graph(14), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = balanced_vertex_separator(n, &edges, &mut Dinic, &mut rng, None).unwrap();
        let mut all: Vec<usize> = s.a.iter().chain(&s.sep).chain(&s.b).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(!connected_around(n, &edges, &s.sep, &s.a, &s.b));
        if s.sep.len() < n {
            prop_assert!(3 * s.a.len() <= 2 * n && 3 * s.b.len() <= 2 * n);
        }
    }

    #[test]
    fn decompositions_are_valid_and_not_below_treewidth((n, edges) in graph(11), seed in any::<u64>()) {
        let tw = exact_treewidth(n, &edges);
        let settings = TwSettings { seed, ..TwSettings::default() };
        let td = build_tree_decomposition(n, &edges, &mut Dinic, &settings).unwrap();
        prop_assert!(validate_tree_decomposition(n, &edges, &td).is_ok());
        prop_assert!(td.width() >= tw);
        let mf = min_fill_decomposition(n, &edges, seed);
        prop_assert!(validate_tree_decomposition(n, &edges, &mf).is_ok());
        prop_assert!(mf.width() >= tw);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn engines_agree_on_cut_values((n, edges) in graph(7), seed in any::<u64>()) {
        prop_assume!(n >= 2);
        let inst = vertex_to_edge_reduction(n, &edges, DEFAULT_BALANCE);
        let a = seed as usize % n;
        let b = (a + 1 + (seed >> 8) as usize % (n - 1)) % n;
        let (x, _) = min_cut_between(&inst, &mut Dinic, &[in_node(a)], &[out_node(n, b)]).unwrap();
        let (y, _) = min_cut_between(&inst, &mut IpmEngine::default(), &[in_node(a)], &[out_node(n, b)]).unwrap();
        prop_assert_eq!(x, y);
    }
}
