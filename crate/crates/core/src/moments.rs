//! The pairwise statistic `phi_ab = Var(v_a - v_b)` and the closed forms it
//! takes around a common parent (pairs) and a common ancestor (triples).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{LineImpedance, NodeId, PathSummary, RadialTree};
use crate::powerflow::{analytic_voltage_moments, hinv_entry_pathsum, InjectionStats, NodeStats, SampleMatrix, WeightKind};

/// Symmetric matrix of `phi` over an ordered node list. Diagonal is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiMatrix {
    nodes: Vec<NodeId>,
    slot: Vec<Option<usize>>,
    values: DMatrix<f64>,
}

impl PhiMatrix {
    pub fn new(nodes: Vec<NodeId>, values: DMatrix<f64>) -> Result<Self> {
        let k = nodes.len();
        if values.nrows() != k || values.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: values.nrows(),
            });
        }
        let max = nodes.iter().map(|v| v.0).max().map_or(0, |m| m + 1);
        let mut slot = vec![None; max];
        for (i, v) in nodes.iter().enumerate() {
            slot[v.0] = Some(i);
        }
        Ok(Self { nodes, slot, values })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn index_of(&self, v: NodeId) -> Option<usize> {
        self.slot.get(v.0).copied().flatten()
    }

    pub fn try_get(&self, a: NodeId, b: NodeId) -> Option<f64> {
        Some(self.values[(self.index_of(a)?, self.index_of(b)?)])
    }

    /// Panics if either node is not in the matrix.
    pub fn get(&self, a: NodeId, b: NodeId) -> f64 {
        self.try_get(a, b)
            .unwrap_or_else(|| panic!("phi({a},{b}) not available"))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
}

/// Unbiased (`m - 1`) sample variance of `v_a - v_b` for every pair of columns,
/// with means taken from the same samples.
pub fn empirical_phi(samples: &SampleMatrix) -> Result<PhiMatrix> {
    let m = samples.rows();
    if m < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: m });
    }
    let k = samples.observed().len();
    // centered, column-major copy
    let mut cols = vec![0.0; m * k];
    for j in 0..k {
        let mut mean = 0.0;
        for i in 0..m {
            mean += samples.row(i)[j];
        }
        mean /= m as f64;
        for i in 0..m {
            cols[j * m + i] = samples.row(i)[j] - mean;
        }
    }
    let mut values = DMatrix::zeros(k, k);
    for a in 0..k {
        let ca = &cols[a * m..(a + 1) * m];
        for b in (a + 1)..k {
            let cb = &cols[b * m..(b + 1) * m];
            let ss: f64 = ca.iter().zip(cb).map(|(x, y)| (x - y) * (x - y)).sum();
            let phi = ss / (m - 1) as f64;
            values[(a, b)] = phi;
            values[(b, a)] = phi;
        }
    }
    PhiMatrix::new(samples.observed().to_vec(), values)
}

/// `phi_ab = Omega_v(a,a) - 2 Omega_v(a,b) + Omega_v(b,b)` from the analytic covariance.
pub fn analytic_phi(tree: &RadialTree, stats: &InjectionStats, a: NodeId, b: NodeId) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let m = analytic_voltage_moments(tree, stats)?;
    Ok(phi_from_cov(&m.cov, a, b))
}

fn phi_from_cov(cov: &DMatrix<f64>, a: NodeId, b: NodeId) -> f64 {
    if a == b {
        return 0.0;
    }
    let (i, j) = (a.0 - 1, b.0 - 1);
    (cov[(i, i)] - 2.0 * cov[(i, j)] + cov[(j, j)]).max(0.0)
}

/// Second route to `phi_ab`: sum over every node `d` of the injection moments
/// weighted by the differences of path-sum inverse entries.
pub fn analytic_phi_pathsum(tree: &RadialTree, stats: &InjectionStats, a: NodeId, b: NodeId) -> Result<f64> {
    let mut total = 0.0;
    for d in tree.non_root_nodes() {
        let dr = hinv_entry_pathsum(tree, a, d, WeightKind::InverseResistance)?
            - hinv_entry_pathsum(tree, b, d, WeightKind::InverseResistance)?;
        let dx = hinv_entry_pathsum(tree, a, d, WeightKind::InverseReactance)?
            - hinv_entry_pathsum(tree, b, d, WeightKind::InverseReactance)?;
        total += quad(dr, dx, stats.get(d));
    }
    Ok(total)
}

/// Analytic `phi` for every pair of `nodes`.
pub fn analytic_phi_matrix(tree: &RadialTree, stats: &InjectionStats, nodes: &[NodeId]) -> Result<PhiMatrix> {
    let m = analytic_voltage_moments(tree, stats)?;
    let k = nodes.len();
    let mut values = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            let phi = phi_from_cov(&m.cov, nodes[i], nodes[j]);
            values[(i, j)] = phi;
            values[(j, i)] = phi;
        }
    }
    PhiMatrix::new(nodes.to_vec(), values)
}

/// `r^2 var_p + x^2 var_q + 2 r x cov_pq`: variance of `r p + x q`.
#[inline]
pub fn quad(r: f64, x: f64, s: &NodeStats) -> f64 {
    r * r * s.var_p + x * x * s.var_q + 2.0 * r * x * s.cov_pq
}

/// `phi_ac` predicted for two terminal nodes `a`, `c` hanging off a common
/// parent `b` through lines `z_ab` and `z_bc`.
pub fn sibling_rhs(z_ab: LineImpedance, z_bc: LineImpedance, stats_a: &NodeStats, stats_c: &NodeStats) -> f64 {
    quad(z_ab.r, z_ab.x, stats_a) + quad(z_bc.r, z_bc.x, stats_c)
}

/// General pair identity for two children `a`, `c` of the same parent: every
/// descendant of `a` contributes through `z_ab`, every descendant of `c`
/// through `z_bc`.
pub fn sibling_general(tree: &RadialTree, stats: &InjectionStats, a: NodeId, c: NodeId) -> Result<f64> {
    let pa = tree.parent(a);
    if pa.is_none() || pa != tree.parent(c) || a == c {
        return Err(Error::NotAnAncestor {
            node: c,
            ancestor: pa.unwrap_or(NodeId::ROOT),
        });
    }
    let za = tree.impedance_to_parent(a).expect("tree edge");
    let zc = tree.impedance_to_parent(c).expect("tree edge");
    let sa: f64 = tree.descendants(a).iter().map(|d| quad(za.r, za.x, stats.get(*d))).sum();
    let sc: f64 = tree.descendants(c).iter().map(|d| quad(zc.r, zc.x, stats.get(*d))).sum();
    Ok(sa + sc)
}

/// `phi_ac - phi_bc` predicted for sibling terminals `a`, `b` under `k1` and
/// a terminal `c` whose path meets that of `k1` exactly at `k2`.
///
/// Arguments are the path summaries from `a`, `b` and `k1` up to `k2`.
/// Only the injections at `a` and `b` enter, so the value is the same for
/// every such `c`.
pub fn triple_path_rhs(
    path_a: &PathSummary,
    path_b: &PathSummary,
    path_k1: &PathSummary,
    stats_a: &NodeStats,
    stats_b: &NodeStats,
) -> Result<f64> {
    if path_a.ancestor != path_k1.ancestor {
        return Err(Error::AncestorMismatch(path_a.ancestor, path_k1.ancestor));
    }
    if path_b.ancestor != path_k1.ancestor {
        return Err(Error::AncestorMismatch(path_b.ancestor, path_k1.ancestor));
    }
    Ok(triple_rhs(
        (path_a.r_sum, path_a.x_sum),
        (path_b.r_sum, path_b.x_sum),
        (path_k1.r_sum, path_k1.x_sum),
        stats_a,
        stats_b,
    ))
}

/// Raw form of [`triple_path_rhs`] on `(r, x)` path sums.
#[inline]
pub fn triple_rhs(a: (f64, f64), b: (f64, f64), k1: (f64, f64), stats_a: &NodeStats, stats_b: &NodeStats) -> f64 {
    let shared = |s: &NodeStats| quad(k1.0, k1.1, s);
    (quad(a.0, a.1, stats_a) - shared(stats_a)) - (quad(b.0, b.1, stats_b) - shared(stats_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CandidateGraph, EdgeKey};

    fn build(n: usize, edges: &[(usize, usize, f64, f64)]) -> RadialTree {
        let mut g = CandidateGraph::new(n);
        let mut keys: Vec<EdgeKey> = Vec::new();
        for &(u, v, r, x) in edges {
            g.add_edge(NodeId(u), NodeId(v), LineImpedance::new(r, x).unwrap())
                .unwrap();
            keys.push((NodeId(u), NodeId(v)));
        }
        RadialTree::from_edges(&g, &keys).unwrap()
    }

    fn st(var_p: f64, var_q: f64, cov_pq: f64) -> NodeStats {
        NodeStats { var_p, var_q, cov_pq, mean_p: -0.3, mean_q: -0.1 }
    }

    #[test]
    fn identical_and_constant_columns() {
        let s = SampleMatrix::new(
            vec![NodeId(1), NodeId(2), NodeId(3)],
            vec![1.0, 1.0, 5.0, 2.0, 2.0, 5.0, 4.0, 4.0, 5.0],
        )
        .unwrap();
        let phi = empirical_phi(&s).unwrap();
        assert_eq!(phi.get(NodeId(1), NodeId(2)), 0.0);
        // var of (1,2,4) - 5 = var(1,2,4) = 7/3 (unbiased)
        assert!((phi.get(NodeId(1), NodeId(3)) - 7.0 / 3.0).abs() < 1e-12);
        let c = SampleMatrix::new(vec![NodeId(1), NodeId(2)], vec![0.3, 0.1, 0.3, 0.1]).unwrap();
        assert_eq!(empirical_phi(&c).unwrap().values(), &DMatrix::zeros(2, 2));
        let one = SampleMatrix::new(vec![NodeId(1)], vec![0.3]).unwrap();
        assert!(matches!(empirical_phi(&one), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn sibling_substitution() {
        let z = LineImpedance::new(1.0, 1.0).unwrap();
        let s = st(1.0, 1.0, 0.0);
        assert_eq!(sibling_rhs(z, z, &s, &s), 4.0);
        let zero = NodeStats::default();
        assert_eq!(sibling_rhs(z, z, &zero, &zero), 0.0);
    }

    #[test]
    fn leaf_pair_matches_both_routes() {
        // root(0) - b(1), b - {a(2), c(3), d(4)}
        let t = build(5, &[(0, 1, 0.02, 0.05), (1, 2, 0.03, 0.01), (1, 3, 0.06, 0.04), (1, 4, 0.05, 0.05)]);
        let stats = InjectionStats::new(vec![
            NodeStats::default(),
            st(0.7, 0.4, 0.1),
            st(1.1, 0.9, 0.3),
            st(0.8, 1.3, -0.2),
            st(0.6, 0.5, 0.0),
        ])
        .unwrap();
        let phi = analytic_phi(&t, &stats, NodeId(2), NodeId(3)).unwrap();
        let alt = analytic_phi_pathsum(&t, &stats, NodeId(2), NodeId(3)).unwrap();
        let rhs = sibling_rhs(
            LineImpedance::new(0.03, 0.01).unwrap(),
            LineImpedance::new(0.06, 0.04).unwrap(),
            stats.get(NodeId(2)),
            stats.get(NodeId(3)),
        );
        assert!((phi - alt).abs() < 1e-14);
        assert!((phi - rhs).abs() < 1e-14);
        assert_eq!(analytic_phi(&t, &stats, NodeId(3), NodeId(3)).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_siblings_cancel() {
        let p = |r, x| PathSummary { ancestor: NodeId(9), node: NodeId(1), r_sum: r, x_sum: x };
        let s = st(0.5, 0.2, 0.1);
        let v = triple_path_rhs(&p(0.3, 0.2), &p(0.3, 0.2), &p(0.1, 0.1), &s, &s).unwrap();
        assert_eq!(v, 0.0);
        let zero = NodeStats::default();
        let v = triple_path_rhs(&p(0.3, 0.2), &p(0.5, 0.1), &p(0.1, 0.1), &zero, &zero).unwrap();
        assert_eq!(v, 0.0);
        let mut other = p(0.1, 0.1);
        other.ancestor = NodeId(3);
        assert!(matches!(
            triple_path_rhs(&p(0.3, 0.2), &p(0.3, 0.2), &other, &s, &s),
            Err(Error::AncestorMismatch(..))
        ));
    }

    #[test]
    fn figure_two_b_triple() {
        // root(0) - k2(1); k2 - k(2), k2 - c(3), k2 - e(8); k - k1(4), k - f(7); k1 - a(5), k1 - b(6)
        let t = build(
            9,
            &[
                (0, 1, 0.02, 0.03),
                (1, 2, 0.04, 0.02),
                (1, 3, 0.05, 0.07),
                (1, 8, 0.01, 0.09),
                (2, 4, 0.06, 0.01),
                (2, 7, 0.03, 0.03),
                (4, 5, 0.02, 0.08),
                (4, 6, 0.07, 0.05),
            ],
        );
        let mut v = vec![NodeStats::default()];
        for i in 1..9 {
            let f = i as f64;
            v.push(st(0.5 + 0.1 * f, 1.2 - 0.05 * f, 0.02 * f));
        }
        let stats = InjectionStats::new(v).unwrap();
        let (a, b, k1, k2) = (NodeId(5), NodeId(6), NodeId(4), NodeId(1));
        let pa = t.path_impedance(a, k2).unwrap();
        // r^{k2}_a = r_{a k1} + r_{k1 k} + r_{k k2}
        assert!((pa.r_sum - (0.02 + 0.06 + 0.04)).abs() < 1e-15);
        let rhs = triple_path_rhs(
            &pa,
            &t.path_impedance(b, k2).unwrap(),
            &t.path_impedance(k1, k2).unwrap(),
            stats.get(a),
            stats.get(b),
        )
        .unwrap();
        for c in [NodeId(3), NodeId(8)] {
            let lhs = analytic_phi(&t, &stats, a, c).unwrap() - analytic_phi(&t, &stats, b, c).unwrap();
            assert!((lhs - rhs).abs() < 1e-12, "c={c}: {lhs} vs {rhs}");
        }
    }
}
