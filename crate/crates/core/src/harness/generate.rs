//! Random instances.
//!
//! Generation policy (not a property of any real feeder):
//! - line resistance and reactance uniform in `[0.01, 0.1]` p.u., for tree
//!   lines and extra candidate lines alike;
//! - injection standard deviations uniform in `[0.5, 1.5]` (active) and
//!   `[0.3, 1.0]` (reactive), p-q correlation uniform in `[-0.3, 0.8]`;
//! - mean injections negative (loads): `mean_p` in `[-1, -0.1]`, `mean_q` in
//!   `[-0.4, -0.05]`.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{edge_key, CandidateGraph, EdgeKey, LineImpedance, NodeId, RadialTree};
use crate::harness::gridfile::{GridEdge, GridFile, NodeKind};
use crate::powerflow::NodeStats;

pub const IMPEDANCE_RANGE: (f64, f64) = (0.01, 0.1);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorParams {
    pub n_leaves: usize,
    pub n_intermediates: usize,
    pub extra_edges: usize,
    pub seed: u64,
}

/// Number of node pairs that are not tree lines.
pub fn max_extra_edges(n_leaves: usize, n_intermediates: usize) -> usize {
    let n = n_leaves + n_intermediates + 1;
    n * (n - 1) / 2 - (n - 1)
}

pub fn random_impedance<R: Rng>(rng: &mut R) -> LineImpedance {
    let (lo, hi) = IMPEDANCE_RANGE;
    LineImpedance {
        r: rng.random_range(lo..hi),
        x: rng.random_range(lo..hi),
    }
}

pub fn random_stats<R: Rng>(rng: &mut R) -> NodeStats {
    let sp: f64 = rng.random_range(0.5..1.5);
    let sq: f64 = rng.random_range(0.3..1.0);
    let rho: f64 = rng.random_range(-0.3..0.8);
    NodeStats {
        var_p: sp * sp,
        var_q: sq * sq,
        cov_pq: rho * sp * sq,
        mean_p: rng.random_range(-1.0..-0.1),
        mean_q: rng.random_range(-0.4..-0.05),
    }
}

/// Random radial grid in which every intermediate node has at least two
/// children and the substation feeds a single intermediate node.
///
/// The tree is grown by repeatedly merging groups of two or more current
/// subtrees under a new intermediate node, so every shape with the requested
/// counts is reachable. Node ids are shuffled afterwards.
pub fn generate_instance(params: GeneratorParams) -> Result<GridFile> {
    let GeneratorParams {
        n_leaves: l,
        n_intermediates: m,
        extra_edges,
        seed,
    } = params;
    if m == 0 || l < m + 1 {
        return Err(Error::InfeasibleShape(format!(
            "{l} leaves cannot support {m} intermediates with degree >= 3 (need leaves >= intermediates + 1 >= 2)"
        )));
    }
    let max_extra = max_extra_edges(l, m);
    if extra_edges > max_extra {
        return Err(Error::InfeasibleShape(format!(
            "{extra_edges} extra edges requested, only {max_extra} node pairs available"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = l + m + 1;

    // Local labels: leaves 0..l, intermediates l..l+m. Group sizes: each merge
    // absorbs 1 + extra_k subtrees beyond the first, sum of extras = l - 1 - m.
    let mut extra = vec![0usize; m];
    for _ in 0..(l - 1 - m) {
        extra[rng.random_range(0..m)] += 1;
    }
    let mut roots: Vec<usize> = (0..l).collect();
    let mut local_edges: Vec<(usize, usize)> = Vec::with_capacity(n - 1);
    for (k, ex) in extra.iter().enumerate() {
        let group = 2 + ex;
        let node = l + k;
        roots.shuffle(&mut rng);
        for child in roots.drain(roots.len() - group..) {
            local_edges.push((node, child));
        }
        roots.push(node);
    }
    debug_assert_eq!(roots.len(), 1);
    let top = roots[0];

    let mut ids: Vec<usize> = (1..n).collect();
    ids.shuffle(&mut rng);
    let id_of = |local: usize| NodeId(ids[local]);

    let mut kinds = vec![NodeKind::Intermediate; n];
    kinds[0] = NodeKind::Root;
    for leaf in 0..l {
        kinds[id_of(leaf).0] = NodeKind::Leaf;
    }
    let mut tree_edges: Vec<EdgeKey> = vec![edge_key(NodeId::ROOT, id_of(top))];
    tree_edges.extend(local_edges.iter().map(|&(u, v)| edge_key(id_of(u), id_of(v))));

    let mut edges: Vec<GridEdge> = tree_edges
        .iter()
        .map(|&(u, v)| GridEdge {
            u,
            v,
            z: random_impedance(&mut rng),
            operational: true,
        })
        .collect();
    let in_tree: BTreeSet<EdgeKey> = tree_edges.iter().copied().collect();
    let mut others: Vec<EdgeKey> = (0..n)
        .flat_map(|u| ((u + 1)..n).map(move |v| (NodeId(u), NodeId(v))))
        .filter(|e| !in_tree.contains(e))
        .collect();
    let (chosen, _) = others.partial_shuffle(&mut rng, extra_edges);
    let mut chosen = chosen.to_vec();
    chosen.sort();
    for (u, v) in chosen {
        edges.push(GridEdge {
            u,
            v,
            z: random_impedance(&mut rng),
            operational: false,
        });
    }

    let stats: BTreeMap<NodeId, NodeStats> = (1..n).map(|v| (NodeId(v), random_stats(&mut rng))).collect();
    let grid = GridFile::new(kinds, edges, stats)?;
    debug_assert!(grid.tree().is_ok());
    Ok(grid)
}

/// Random shape with `n` total nodes (root included) satisfying the degree rules.
pub fn random_shape<R: Rng>(n: usize, rng: &mut R) -> (usize, usize) {
    assert!(n >= 4, "need at least root, one intermediate and two leaves");
    let non_root = n - 1;
    let max_m = (non_root - 1) / 2;
    let m = rng.random_range(1..=max_m);
    (non_root - m, m)
}

/// Uniform random recursive tree on `n` nodes (no identifiability rules) with
/// its own edges as the candidate graph.
pub fn random_recursive_tree(n: usize, seed: u64) -> (CandidateGraph, RadialTree) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = CandidateGraph::new(n);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for v in 1..n {
        let p = rng.random_range(0..v);
        g.add_edge(NodeId(p), NodeId(v), random_impedance(&mut rng))
            .expect("fresh edge");
        edges.push((NodeId(p), NodeId(v)));
    }
    let t = RadialTree::from_edges(&g, &edges).expect("recursive tree spans");
    (g, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_leaf_shape() {
        let g = generate_instance(GeneratorParams {
            n_leaves: 12,
            n_intermediates: 8,
            extra_edges: 30,
            seed: 3,
        })
        .unwrap();
        assert_eq!(g.node_count(), 21);
        assert_eq!(g.leaves().len(), 12);
        assert_eq!(g.missing().len(), 8);
        assert_eq!(g.edges().len(), 20 + 30);
        let t = g.tree().unwrap();
        assert_eq!(t.leaves(), &g.leaves());
    }

    #[test]
    fn no_extra_edges_means_tree_only() {
        let g = generate_instance(GeneratorParams {
            n_leaves: 5,
            n_intermediates: 3,
            extra_edges: 0,
            seed: 9,
        })
        .unwrap();
        assert!(g.edges().iter().all(|e| e.operational));
    }

    #[test]
    fn infeasible_shapes() {
        let p = |l, m, e| GeneratorParams {
            n_leaves: l,
            n_intermediates: m,
            extra_edges: e,
            seed: 0,
        };
        assert!(matches!(generate_instance(p(3, 3, 0)), Err(Error::InfeasibleShape(_))));
        assert!(matches!(generate_instance(p(3, 0, 0)), Err(Error::InfeasibleShape(_))));
        assert!(matches!(generate_instance(p(2, 1, 4)), Err(Error::InfeasibleShape(_))));
        assert!(generate_instance(p(2, 1, 0)).is_ok());
    }

    #[test]
    fn seed_determines_instance() {
        let p = GeneratorParams {
            n_leaves: 7,
            n_intermediates: 4,
            extra_edges: 10,
            seed: 11,
        };
        assert_eq!(generate_instance(p).unwrap(), generate_instance(p).unwrap());
    }
}
