use adgossip::topology::{self, Graph, TopologyError};
use proptest::prelude::*;

/// All-pairs shortest paths by Floyd-Warshall over the edge list.
fn floyd_warshall(n: usize, edges: &[(u32, u32)]) -> Vec<Vec<Option<u32>>> {
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for &(u, v) in edges {
        d[u as usize][v as usize] = Some(1);
        d[v as usize][u as usize] = Some(1);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

fn oracle_diameter(n: usize, edges: &[(u32, u32)]) -> Option<u32> {
    let d = floyd_warshall(n, edges);
    d.iter()
        .flatten()
        .try_fold(0, |acc, x| x.map(|x| acc.max(x)))
}

#[test]
fn generated_overlays_meet_constraints() {
    for seed in 0..10 {
        let g = topology::generate_overlay(100, 2, 8, seed, 1000).unwrap();
        assert_eq!(g.node_count(), 100);
        assert_eq!(g.edge_count(), 200);
        let edges = g.edges();
        assert_eq!(
            oracle_diameter(100, &edges),
            Some(topology::diameter(&g).unwrap())
        );
        assert!(topology::diameter(&g).unwrap() <= 8);
        for v in 0..100 {
            assert!(g.degree(v) >= 2, "node {v} has degree {}", g.degree(v));
            assert!(!g.has_edge(v, v));
        }
    }
}

#[test]
fn generation_is_deterministic_per_seed() {
    let a = topology::generate_overlay(60, 2, 8, 42, 100).unwrap();
    let b = topology::generate_overlay(60, 2, 8, 42, 100).unwrap();
    let c = topology::generate_overlay(60, 2, 8, 43, 100).unwrap();
    assert_eq!(topology::export_dot(&a), topology::export_dot(&b));
    assert!(!a.same_structure(&c));
}

#[test]
fn impossible_diameter_is_reported() {
    let err = topology::generate_overlay(50, 1, 1, 3, 5).unwrap_err();
    assert!(
        matches!(
            err,
            TopologyError::ConstraintUnsatisfiable { attempts: 5, .. }
        ),
        "{err}"
    );
}

#[test]
fn dot_import_accepts_common_syntax() {
    let text = "// overlay\ngraph \"net\" {\n  node [shape=circle];\n  0 -- 1 -- 2 [weight=1];\n  \"3\" -- 2;\n  /* block */ 4;\n  4 -- 0\n}\n";
    let g = topology::import_dot(text).unwrap();
    assert_eq!(g.node_count(), 5);
    assert_eq!(g.edges(), vec![(0, 1), (0, 4), (1, 2), (2, 3)]);
}

#[test]
fn dot_import_rejects_bad_input() {
    assert!(matches!(
        topology::import_dot("digraph G { 0 -> 1; }"),
        Err(TopologyError::RejectDirected { .. })
    ));
    assert!(matches!(
        topology::import_dot("graph G {\n 0 -- 1;\n 1 -- 1;\n}"),
        Err(TopologyError::Parse { line: 3, .. })
    ));
    assert!(matches!(
        topology::import_dot("graph G {\n 0 -- 1;\n 1 -- 0;\n}"),
        Err(TopologyError::Parse { .. })
    ));
    assert!(matches!(
        topology::import_dot("graph G { 0 -- 1; 2 -- 3; }"),
        Err(TopologyError::Disconnected)
    ));
    assert!(topology::import_dot("graph G { 0 -- ; }").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dot_round_trip(n in 2usize..40, e in 1usize..4, seed in any::<u64>()) {
        let e = e.min(n - 1);
        let g = topology::generate_overlay(n, e, 40, seed, 50).unwrap();
        let back = topology::import_dot(&topology::export_dot(&g)).unwrap();
        prop_assert!(back.same_structure(&g));
        prop_assert_eq!(topology::export_dot(&back), topology::export_dot(&g));
    }

    #[test]
    fn bfs_matches_floyd_warshall(edges in prop::collection::vec((0u32..12, 0u32..12), 1..30)) {
        let mut clean: Vec<(u32, u32)> = edges
            .into_iter()
            .filter(|(u, v)| u != v)
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        clean.sort();
        clean.dedup();
        prop_assume!(!clean.is_empty());
        let n = clean.iter().map(|&(_, v)| v as usize + 1).max().unwrap();
        let g = Graph::from_edges(n, clean.iter().copied()).unwrap();
        let d = floyd_warshall(n, &clean);
        for root in 0..n as u32 {
            prop_assert_eq!(&topology::bfs_distances(&g, root), &d[root as usize]);
        }
        match oracle_diameter(n, &clean) {
            Some(diam) => prop_assert_eq!(topology::diameter(&g).unwrap(), diam),
            None => prop_assert!(topology::diameter(&g).is_err()),
        }
    }
}
