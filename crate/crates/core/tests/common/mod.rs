#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use leafgrid::grid::EdgeKey;
use leafgrid::harness::generate::{random_impedance, random_stats};
use leafgrid::harness::metrics::fractional_error;
use leafgrid::moments::analytic_phi_matrix;
use leafgrid::{
    learn_topology, CandidateGraph, InjectionStats, LearnedTopology, LearnerConfig, NodeId, NodeStats, Problem,
    RadialTree,
};

pub struct Instance {
    pub graph: CandidateGraph,
    pub tree: RadialTree,
    pub stats: InjectionStats,
}

/// Builds an instance from tree lines (u, v) plus `extra` random non-tree
/// candidate lines; impedances and stats are random.
pub fn instance_from_tree(n: usize, tree_edges: &[(usize, usize)], extra: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = CandidateGraph::new(n);
    let mut keys: Vec<EdgeKey> = Vec::new();
    for &(u, v) in tree_edges {
        graph.add_edge(NodeId(u), NodeId(v), random_impedance(&mut rng)).unwrap();
        keys.push((NodeId(u), NodeId(v)));
    }
    let in_tree: BTreeSet<(usize, usize)> = tree_edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    let mut others: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
        .filter(|e| !in_tree.contains(e))
        .collect();
    others.shuffle(&mut rng);
    for &(u, v) in others.iter().take(extra) {
        graph.add_edge(NodeId(u), NodeId(v), random_impedance(&mut rng)).unwrap();
    }
    let tree = RadialTree::from_edges(&graph, &keys).unwrap();
    let mut stats = vec![NodeStats::default(); n];
    for s in stats.iter_mut().skip(1) {
        *s = random_stats(&mut rng);
    }
    Instance {
        graph,
        tree,
        stats: InjectionStats::new(stats).unwrap(),
    }
}

/// Complete binary tree of the given depth hanging off the substation:
/// node 1 is the top, children of i are 2i and 2i+1.
pub fn binary_tree_edges(depth: usize) -> (usize, Vec<(usize, usize)>) {
    let count = (1usize << (depth + 1)) - 1;
    let mut e = vec![(0, 1)];
    for i in 1..=count {
        for c in [2 * i, 2 * i + 1] {
            if c <= count {
                e.push((i, c));
            }
        }
    }
    (count + 1, e)
}

/// Spine of `k` missing nodes 1..=k below the substation; spine node i
/// carries terminal k+i, and the last spine node carries one more terminal.
pub fn line_with_leaves_edges(k: usize) -> (usize, Vec<(usize, usize)>) {
    let mut e = vec![(0, 1)];
    for i in 1..k {
        e.push((i, i + 1));
    }
    for i in 1..=k {
        e.push((i, k + i));
    }
    e.push((k, 2 * k + 1));
    (2 * k + 2, e)
}

pub fn learn_exact(inst: &Instance, tau: f64) -> LearnedTopology {
    let leaves = inst.tree.leaves().clone();
    let missing = inst.tree.missing().clone();
    let list: Vec<NodeId> = leaves.iter().copied().collect();
    let phi = analytic_phi_matrix(&inst.tree, &inst.stats, &list).unwrap();
    let p = Problem::new(&phi, &inst.stats, &inst.graph, &leaves, &missing).unwrap();
    learn_topology(&p, &LearnerConfig::new(tau, tau).unwrap()).unwrap()
}

pub fn exact_error(inst: &Instance, tau: f64) -> f64 {
    fractional_error(&learn_exact(inst, tau), &inst.tree).unwrap()
}

/// Median of a non-empty slice.
pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Least-squares slope of ln(y) on ln(x).
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
