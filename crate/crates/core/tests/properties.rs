use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use leafgrid::grid::{edge_key, post_order};
use leafgrid::harness::generate::{generate_instance, max_extra_edges, random_recursive_tree, GeneratorParams};
use leafgrid::harness::gridfile::GridFile;
use leafgrid::harness::metrics::fractional_error;
use leafgrid::moments::analytic_phi_matrix;
use leafgrid::oracle::random_valid_instance;
use leafgrid::powerflow::{hinv_dense, hinv_entry_pathsum, hinv_pathsum_matrix, WeightKind};
use leafgrid::{learn_topology, validate_tree, LearnerConfig, MatchRule, NodeId, Problem};

fn shape() -> impl Strategy<Value = (usize, usize)> {
    (1usize..8).prop_flat_map(|m| ((m + 1)..(m + 10), Just(m)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn pathsum_inverse_matches_dense(n in 2usize..40, seed in any::<u64>()) {
        let (_, t) = random_recursive_tree(n, seed);
        for kind in [WeightKind::InverseResistance, WeightKind::InverseReactance] {
            let dense = hinv_dense(&t, kind).unwrap();
            let paths = hinv_pathsum_matrix(&t, kind);
            prop_assert!((dense - paths).amax() < 1e-9);
        }
    }

    #[test]
    fn parent_child_rows_telescope(n in 3usize..30, seed in any::<u64>()) {
        // H^-1(a, c) - H^-1(b, c) is the line (a b) when c is below a, else 0
        let (g, t) = random_recursive_tree(n, seed);
        for a in t.non_root_nodes() {
            let b = t.parent(a).unwrap();
            if b.is_root() {
                continue;
            }
            let r_ab = g.impedance(a, b).unwrap().r;
            for c in t.non_root_nodes() {
                let d = hinv_entry_pathsum(&t, a, c, WeightKind::InverseResistance).unwrap()
                    - hinv_entry_pathsum(&t, b, c, WeightKind::InverseResistance).unwrap();
                let want = if t.is_ancestor(a, c) { r_ab } else { 0.0 };
                prop_assert!((d - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn root_path_sum_equals_path_to_root(n in 2usize..30, seed in any::<u64>()) {
        let (g, t) = random_recursive_tree(n, seed);
        for v in t.nodes() {
            let s = t.path_impedance(v, NodeId::ROOT).unwrap();
            let r: f64 = t.path_to_root(v).unwrap().iter().map(|&(a, b)| g.impedance(a, b).unwrap().r).sum();
            prop_assert!((s.r_sum - r).abs() < 1e-14);
            prop_assert_eq!(s.r_sum == 0.0, v.is_root());
        }
    }

    #[test]
    fn generated_instances_are_valid((l, m) in shape(), extra in 0usize..20, seed in any::<u64>()) {
        let g = generate_instance(GeneratorParams { n_leaves: l, n_intermediates: m, extra_edges: extra.min(max_extra_edges(l, m)), seed }).unwrap();
        let t = validate_tree(&g.graph().unwrap(), &g.operational_edges(), &g.leaves()).unwrap();
        prop_assert_eq!(t.edges().len(), t.node_count() - 1);
        prop_assert_eq!(t.children(NodeId::ROOT).len(), 1);
        for k in t.missing() {
            prop_assert!(t.degree(*k) >= 3);
        }
        for v in t.nodes() {
            prop_assert!(t.is_ancestor(NodeId::ROOT, v));
        }
    }

    #[test]
    fn grid_file_round_trip((l, m) in shape(), extra in 0usize..15, seed in any::<u64>()) {
        let g = generate_instance(GeneratorParams { n_leaves: l, n_intermediates: m, extra_edges: extra.min(max_extra_edges(l, m)), seed }).unwrap();
        let text = g.to_text();
        let back = GridFile::parse(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(back, g);
    }

    #[test]
    fn post_order_is_topological(n in 1usize..40, seed in any::<u64>()) {
        let (_, t) = random_recursive_tree(n + 1, seed);
        // forest over non-root nodes: children of the root become roots
        let forest: BTreeMap<NodeId, Option<NodeId>> = t
            .non_root_nodes()
            .map(|v| (v, t.parent(v).filter(|p| !p.is_root())))
            .collect();
        let order = post_order(&forest).unwrap();
        prop_assert_eq!(order.len(), forest.len());
        let pos: BTreeMap<NodeId, usize> = order.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        for (v, p) in &forest {
            if let Some(p) = p {
                prop_assert!(pos[v] < pos[p]);
            }
        }
    }

    #[test]
    fn exact_moments_recover_the_tree(n in 4usize..31, seed in any::<u64>(), first_pass in any::<bool>()) {
        let (graph, tree, stats) = random_valid_instance(n, 2 * n, seed).unwrap();
        let leaves = tree.leaves().clone();
        let missing = tree.missing().clone();
        let list: Vec<NodeId> = leaves.iter().copied().collect();
        let phi = analytic_phi_matrix(&tree, &stats, &list).unwrap();
        let p = Problem::new(&phi, &stats, &graph, &leaves, &missing).unwrap();
        let rule = if first_pass { MatchRule::FirstPass } else { MatchRule::MinResidual };
        let cfg = LearnerConfig::new(1e-8, 1e-8).unwrap().with_match_rule(rule);
        let learned = learn_topology(&p, &cfg).unwrap();
        let truth: BTreeSet<_> = tree.edges().iter().copied().collect();
        let got: BTreeSet<_> = learned.edges.keys().copied().collect();
        prop_assert_eq!(got, truth);
        prop_assert_eq!(fractional_error(&learned, &tree).unwrap(), 0.0);
        // identical inputs, identical output
        prop_assert_eq!(learn_topology(&p, &cfg).unwrap(), learned);
    }

    #[test]
    fn noisy_moments_stay_inside_the_candidate_graph(
        n in 4usize..25,
        seed in any::<u64>(),
        noise in 1e-4f64..1e-2,
        tau in 1e-5f64..1e-2,
    ) {
        let (graph, tree, stats) = random_valid_instance(n, 2 * n, seed).unwrap();
        let leaves = tree.leaves().clone();
        let missing = tree.missing().clone();
        let list: Vec<NodeId> = leaves.iter().copied().collect();
        let exact = analytic_phi_matrix(&tree, &stats, &list).unwrap();
        // deterministic symmetric perturbation
        let k = list.len();
        let mut v = exact.values().clone();
        for i in 0..k {
            for j in (i + 1)..k {
                let e = noise * (((i * 31 + j * 17) as f64 + seed as f64).sin());
                v[(i, j)] = (v[(i, j)] + e).max(0.0);
                v[(j, i)] = v[(i, j)];
            }
        }
        let phi = leafgrid::PhiMatrix::new(list.clone(), v).unwrap();
        let p = Problem::new(&phi, &stats, &graph, &leaves, &missing).unwrap();
        let learned = learn_topology(&p, &LearnerConfig::new(tau, tau).unwrap()).unwrap();
        for &(u, w) in learned.edges.keys() {
            prop_assert!(graph.has_edge(u, w));
            prop_assert_eq!(edge_key(u, w), (u, w));
        }
        let e = fractional_error(&learned, &tree).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        // parents are written at most once
        prop_assert!(learned.edges.len() < tree.node_count());
    }
}
