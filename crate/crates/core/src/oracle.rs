//! Brute-force cross-checks: closed-form identities swept over random trees,
//! Monte-Carlo moments and exhaustive spanning-tree search on small graphs.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{validate_tree, CandidateGraph, EdgeKey, LineImpedance, NodeId, RadialTree, UnionFind};
use crate::harness::generate::{generate_instance, random_shape, GeneratorParams};
use crate::moments::{sibling_general, sibling_rhs, triple_path_rhs, PhiMatrix};
use crate::powerflow::{analytic_voltage_moments, sample_voltages, splitmix64, InjectionDistribution, InjectionStats};

/// Which side of the tolerance a residual must fall on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// Identity check: residual must stay at or below the tolerance.
    AtMost,
    /// Sensitivity check: residual must exceed the tolerance.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub check_name: String,
    pub instances: usize,
    /// Worst value seen: the largest residual for [`Bound::AtMost`], the
    /// smallest per-instance residual for [`Bound::AtLeast`].
    pub max_abs_residual: f64,
    pub tolerance: f64,
    pub bound: Bound,
    /// `(instance, residual)` for every instance on the wrong side.
    pub failures: Vec<(usize, f64)>,
}

impl ResidualReport {
    fn new(name: &str, tolerance: f64, bound: Bound) -> Self {
        Self {
            check_name: name.to_string(),
            instances: 0,
            max_abs_residual: match bound {
                Bound::AtMost => 0.0,
                Bound::AtLeast => f64::INFINITY,
            },
            tolerance,
            bound,
            failures: Vec::new(),
        }
    }

    /// Records the worst residual of one instance.
    fn record(&mut self, instance: usize, residual: f64) {
        self.instances += 1;
        let ok = match self.bound {
            Bound::AtMost => {
                self.max_abs_residual = self.max_abs_residual.max(residual);
                residual <= self.tolerance
            }
            Bound::AtLeast => {
                self.max_abs_residual = self.max_abs_residual.min(residual);
                residual > self.tolerance
            }
        };
        if !ok || residual.is_nan() {
            self.failures.push((instance, residual));
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl std::fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let op = match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">",
        };
        write!(
            f,
            "{} {}: {} instances, worst {:.3e} (need {} {:.1e}), {} failures",
            if self.passed() { "ok  " } else { "FAIL" },
            self.check_name,
            self.instances,
            self.max_abs_residual,
            op,
            self.tolerance,
            self.failures.len()
        )
    }
}

pub const IDENTITY_TOL: f64 = 1e-9;
/// Non-conforming additivity residuals must exceed this fraction of the
/// largest terminal-pair phi of the instance.
pub const NONCONFORMING_REL: f64 = 1e-6;

/// phi for every pair of nodes from one covariance computation.
fn full_phi(tree: &RadialTree, stats: &InjectionStats) -> Result<DMatrix<f64>> {
    let m = analytic_voltage_moments(tree, stats)?;
    let n = tree.node_count();
    let c = |a: usize, b: usize| -> f64 {
        if a == 0 || b == 0 {
            0.0
        } else {
            m.cov[(a - 1, b - 1)]
        }
    };
    Ok(DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            0.0
        } else {
            c(a, a) - 2.0 * c(a, b) + c(b, b)
        }
    }))
}

struct Instance {
    tree: RadialTree,
    stats: InjectionStats,
}

fn random_instance(size_range: &RangeInclusive<usize>, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = (*size_range.start()).max(4);
    let hi = (*size_range.end()).max(lo);
    let n = rng.random_range(lo..=hi);
    let (_, tree, stats) = random_valid_instance(n, 0, rng.random())?;
    Ok(Instance { tree, stats })
}

/// Random valid instance with `n` total nodes and `extra` non-tree candidate lines.
pub fn random_valid_instance(
    n: usize,
    extra: usize,
    seed: u64,
) -> Result<(CandidateGraph, RadialTree, InjectionStats)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (l, m) = random_shape(n, &mut rng);
    let extra = extra.min(crate::harness::generate::max_extra_edges(l, m));
    let grid = generate_instance(GeneratorParams {
        n_leaves: l,
        n_intermediates: m,
        extra_edges: extra,
        seed: rng.random(),
    })?;
    Ok((grid.graph()?, grid.tree()?, grid.injection_stats()?))
}

#[derive(Debug, Default, Clone, Copy)]
struct SweepResiduals {
    sibling_general: f64,
    sibling_terminal: f64,
    additive_conforming: f64,
    additive_nonconforming: f64,
    triple: f64,
    triple_c_spread: f64,
}

fn sweep_one(inst: &Instance) -> Result<SweepResiduals> {
    let Instance { tree, stats, .. } = inst;
    let phi = full_phi(tree, stats)?;
    let f = |a: NodeId, b: NodeId| phi[(a.0, b.0)];
    let mut out = SweepResiduals::default();
    let nodes: Vec<NodeId> = tree.non_root_nodes().collect();
    let leaves: Vec<NodeId> = tree.leaves().iter().copied().collect();

    // sibling pairs, general and terminal form
    for v in tree.nodes() {
        let ch = tree.children(v);
        if v.is_root() {
            continue;
        }
        for (i, &a) in ch.iter().enumerate() {
            for &c in &ch[i + 1..] {
                let r = (f(a, c) - sibling_general(tree, stats, a, c)?).abs();
                out.sibling_general = out.sibling_general.max(r);
                if tree.is_leaf(a) && tree.is_leaf(c) {
                    let rhs = sibling_rhs(
                        tree.impedance_to_parent(a).expect("tree line"),
                        tree.impedance_to_parent(c).expect("tree line"),
                        stats.get(a),
                        stats.get(c),
                    );
                    out.sibling_terminal = out.sibling_terminal.max((f(a, c) - rhs).abs());
                }
            }
        }
    }

    // additivity through a middle node
    let scale = leaves
        .iter()
        .flat_map(|&a| leaves.iter().map(move |&b| (a, b)))
        .map(|(a, b)| f(a, b))
        .fold(0.0, f64::max);
    let mut worst_nonconf: f64 = 0.0;
    for (i, &a) in nodes.iter().enumerate() {
        for &c in &nodes[i + 1..] {
            for &b in &nodes {
                if b == a || b == c {
                    continue;
                }
                let r = (f(a, c) - f(a, b) - f(b, c)).abs();
                // conforming iff the paths of a and c share exactly the path of b
                let conforming = tree.lca(a, c) == b;
                if conforming {
                    out.additive_conforming = out.additive_conforming.max(r);
                } else {
                    worst_nonconf = worst_nonconf.max(r);
                }
            }
        }
    }
    out.additive_nonconforming = if scale > 0.0 { worst_nonconf / scale } else { 0.0 };

    // sibling terminals a, b under k1, terminal c meeting k1's path at k2
    for &k1 in tree.missing() {
        let tl: Vec<NodeId> = tree.children(k1).iter().copied().filter(|v| tree.is_leaf(*v)).collect();
        for (i, &a) in tl.iter().enumerate() {
            for &b in &tl[i + 1..] {
                let mut k2 = tree.parent(k1).expect("missing nodes have parents");
                while !k2.is_root() {
                    let pa = tree.path_impedance(a, k2)?;
                    let pb = tree.path_impedance(b, k2)?;
                    let pk = tree.path_impedance(k1, k2)?;
                    let rhs = triple_path_rhs(&pa, &pb, &pk, stats.get(a), stats.get(b))?;
                    let mut lhs_range: Option<(f64, f64)> = None;
                    for &c in &leaves {
                        if tree.lca(c, k1) != k2 {
                            continue;
                        }
                        let lhs = f(a, c) - f(b, c);
                        out.triple = out.triple.max((lhs - rhs).abs());
                        lhs_range = Some(match lhs_range {
                            None => (lhs, lhs),
                            Some((lo, hi)) => (lo.min(lhs), hi.max(lhs)),
                        });
                    }
                    if let Some((lo, hi)) = lhs_range {
                        out.triple_c_spread = out.triple_c_spread.max(hi - lo);
                    }
                    k2 = tree.parent(k2).expect("walk stops at the root");
                }
            }
        }
    }
    Ok(out)
}

/// Checks the closed-form phi identities on `trials` random valid trees with
/// total node counts drawn from `size_range`.
pub fn theorem_sweep(trials: usize, size_range: RangeInclusive<usize>, seed: u64) -> Result<Vec<ResidualReport>> {
    let results: Vec<SweepResiduals> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let inst = random_instance(&size_range, splitmix64(seed ^ splitmix64(t as u64)))?;
            sweep_one(&inst)
        })
        .collect::<Result<_>>()?;
    let mut reports = vec![
        ResidualReport::new("sibling-general", IDENTITY_TOL, Bound::AtMost),
        ResidualReport::new("sibling-terminal", IDENTITY_TOL, Bound::AtMost),
        ResidualReport::new("additive-conforming", IDENTITY_TOL, Bound::AtMost),
        ResidualReport::new("additive-nonconforming", NONCONFORMING_REL, Bound::AtLeast),
        ResidualReport::new("triple", IDENTITY_TOL, Bound::AtMost),
        ResidualReport::new("triple-c-invariance", IDENTITY_TOL, Bound::AtMost),
    ];
    for (i, r) in results.iter().enumerate() {
        reports[0].record(i, r.sibling_general);
        reports[1].record(i, r.sibling_terminal);
        reports[2].record(i, r.additive_conforming);
        reports[3].record(i, r.additive_nonconforming);
        reports[4].record(i, r.triple);
        reports[5].record(i, r.triple_c_spread);
    }
    Ok(reports)
}

/// Evaluates the terminal sibling identity with one tree line's impedance
/// scaled by `factor`; the residual should be far from zero.
pub fn corrupted_impedance_check(trials: usize, size_range: RangeInclusive<usize>, seed: u64, factor: f64) -> Result<ResidualReport> {
    let mut report = ResidualReport::new("sibling-terminal-corrupted", IDENTITY_TOL, Bound::AtLeast);
    for t in 0..trials {
        let inst = random_instance(&size_range, splitmix64(seed ^ splitmix64(t as u64)))?;
        let phi = full_phi(&inst.tree, &inst.stats)?;
        let mut worst: f64 = 0.0;
        for &k in inst.tree.missing() {
            let tl: Vec<NodeId> = inst.tree.children(k).iter().copied().filter(|v| inst.tree.is_leaf(*v)).collect();
            if let [a, c, ..] = tl[..] {
                let za = inst.tree.impedance_to_parent(a).expect("tree line");
                let bad = LineImpedance { r: za.r * factor, x: za.x * factor };
                let zc = inst.tree.impedance_to_parent(c).expect("tree line");
                let rhs = sibling_rhs(bad, zc, inst.stats.get(a), inst.stats.get(c));
                worst = worst.max((phi[(a.0, c.0)] - rhs).abs());
            }
        }
        report.record(t, worst);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchOptions {
    /// Only accept trees whose missing nodes all have degree at least 3.
    pub enforce_degree_rule: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTree {
    pub edges: Vec<EdgeKey>,
    /// Sum over terminal pairs of squared deviation from the given phi.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// All feasible trees, best first (ties keep enumeration order).
    pub trees: Vec<ScoredTree>,
}

impl SearchResult {
    pub fn best(&self) -> &ScoredTree {
        &self.trees[0]
    }

    /// Trees whose score is within `tol` of zero.
    pub fn zero_residual(&self, tol: f64) -> Vec<&ScoredTree> {
        self.trees.iter().filter(|t| t.score <= tol).collect()
    }
}

pub const MAX_SEARCH_NODES: usize = 12;

/// Enumerates every spanning tree of `graph` in which the root has one line,
/// the terminals in `leaves` are exactly the degree-one non-root nodes and
/// (optionally) every other node has degree at least 3, and scores each by
/// terminal-pair phi least squares.
pub fn exhaustive_tree_search(
    graph: &CandidateGraph,
    leaf_phi: &PhiMatrix,
    stats: &InjectionStats,
    leaves: &BTreeSet<NodeId>,
    options: SearchOptions,
) -> Result<SearchResult> {
    let n = graph.node_count();
    if n > MAX_SEARCH_NODES {
        return Err(Error::TooLarge { nodes: n, max: MAX_SEARCH_NODES });
    }
    let edges: Vec<EdgeKey> = graph.edges().map(|(e, _)| e).collect();
    let mut search = Enumerator {
        n,
        edges: &edges,
        is_leaf: (0..n).map(|v| leaves.contains(&NodeId(v))).collect(),
        chosen: Vec::with_capacity(n.saturating_sub(1)),
        degree: vec![0; n],
        found: Vec::new(),
    };
    search.recurse(0);

    let leaf_list: Vec<NodeId> = leaves.iter().copied().collect();
    let mut trees = Vec::new();
    for edges in search.found {
        let tree = match validate_tree(graph, &edges, leaves) {
            Ok(t) => t,
            Err(Error::InvalidTree(v))
                if !options.enforce_degree_rule
                    && v.iter().all(|x| x.category() == "DegreeTwoMissingNode") =>
            {
                RadialTree::from_edges(graph, &edges)?
            }
            Err(Error::InvalidTree(_)) => continue,
            Err(e) => return Err(e),
        };
        let phi = full_phi(&tree, stats)?;
        let mut score = 0.0;
        for (i, &a) in leaf_list.iter().enumerate() {
            for &b in &leaf_list[i + 1..] {
                let d = leaf_phi.get(a, b) - phi[(a.0, b.0)];
                score += d * d;
            }
        }
        trees.push(ScoredTree { edges, score });
    }
    if trees.is_empty() {
        return Err(Error::NoFeasibleTree);
    }
    trees.sort_by(|a, b| a.score.total_cmp(&b.score));
    Ok(SearchResult { trees })
}

struct Enumerator<'a> {
    n: usize,
    edges: &'a [EdgeKey],
    is_leaf: Vec<bool>,
    chosen: Vec<EdgeKey>,
    degree: Vec<usize>,
    found: Vec<Vec<EdgeKey>>,
}

impl Enumerator<'_> {
    fn cap(&self, v: NodeId) -> usize {
        if v.is_root() || self.is_leaf[v.0] {
            1
        } else {
            usize::MAX
        }
    }

    fn forest(&self) -> UnionFind {
        let mut uf = UnionFind::new(self.n);
        for &(u, v) in &self.chosen {
            uf.union(u.0, v.0);
        }
        uf
    }

    /// Chosen lines plus every line from `from` on still connect all nodes.
    fn can_span(&self, from: usize) -> bool {
        let mut uf = self.forest();
        for &(u, v) in &self.edges[from..] {
            if self.degree[u.0] < self.cap(u) && self.degree[v.0] < self.cap(v) {
                uf.union(u.0, v.0);
            }
        }
        (1..self.n).all(|v| uf.find(v) == uf.find(0))
    }

    fn recurse(&mut self, i: usize) {
        if self.chosen.len() + 1 == self.n {
            self.found.push(self.chosen.clone());
            return;
        }
        if i == self.edges.len() || self.chosen.len() + (self.edges.len() - i) + 1 < self.n {
            return;
        }
        let (u, v) = self.edges[i];
        if self.degree[u.0] < self.cap(u) && self.degree[v.0] < self.cap(v) {
            let mut uf = self.forest();
            if uf.find(u.0) != uf.find(v.0) {
                self.chosen.push((u, v));
                self.degree[u.0] += 1;
                self.degree[v.0] += 1;
                self.recurse(i + 1);
                self.degree[u.0] -= 1;
                self.degree[v.0] -= 1;
                self.chosen.pop();
            }
        }
        if self.can_span(i + 1) {
            self.recurse(i + 1);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    /// Residuals are absolute z-scores against the empirical standard error.
    pub mean: ResidualReport,
    pub cov: ResidualReport,
    pub phi: ResidualReport,
    /// Largest standard error among covariance entries.
    pub max_cov_stderr: f64,
}

impl MonteCarloReport {
    pub fn passed(&self) -> bool {
        self.mean.passed() && self.cov.passed() && self.phi.passed()
    }
}

pub const MC_Z_LIMIT: f64 = 5.0;

/// Deviations at rounding level count as zero.
fn z_score(dev: f64, se: f64) -> f64 {
    if dev.abs() <= 1e-12 {
        0.0
    } else if se > 0.0 {
        (dev / se).abs()
    } else {
        f64::INFINITY
    }
}

/// Samples `m` voltage vectors at every non-root node and compares sample
/// means, covariances and phi values against their analytic counterparts.
/// Each entry is one "instance" of its report.
pub fn montecarlo_moment_check(tree: &RadialTree, stats: &InjectionStats, m: usize, seed: u64) -> Result<MonteCarloReport> {
    if m < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: m });
    }
    let observed: BTreeSet<NodeId> = tree.non_root_nodes().collect();
    let samples = sample_voltages(tree, stats, m, seed, &observed, InjectionDistribution::Gaussian)?;
    let analytic = analytic_voltage_moments(tree, stats)?;
    let k = observed.len();
    let mf = m as f64;

    let mut mean = vec![0.0; k];
    for i in 0..m {
        for (j, x) in samples.row(i).iter().enumerate() {
            mean[j] += x;
        }
    }
    mean.iter_mut().for_each(|x| *x /= mf);

    // sums of products of centred values and of their squares
    let mut s1 = DMatrix::<f64>::zeros(k, k);
    let mut s2 = DMatrix::<f64>::zeros(k, k);
    let mut d1 = DMatrix::<f64>::zeros(k, k);
    let mut d2 = DMatrix::<f64>::zeros(k, k);
    let mut centred = vec![0.0; k];
    for i in 0..m {
        for (j, x) in samples.row(i).iter().enumerate() {
            centred[j] = x - mean[j];
        }
        for a in 0..k {
            for b in a..k {
                let p = centred[a] * centred[b];
                s1[(a, b)] += p;
                s2[(a, b)] += p * p;
                let d = (centred[a] - centred[b]).powi(2);
                d1[(a, b)] += d;
                d2[(a, b)] += d * d;
            }
        }
    }

    let mut r_mean = ResidualReport::new("voltage-mean", MC_Z_LIMIT, Bound::AtMost);
    let mut r_cov = ResidualReport::new("voltage-covariance", MC_Z_LIMIT, Bound::AtMost);
    let mut r_phi = ResidualReport::new("phi", MC_Z_LIMIT, Bound::AtMost);
    let mut max_cov_se: f64 = 0.0;
    let nodes: Vec<NodeId> = observed.into_iter().collect();
    let mut entry = 0;
    for a in 0..k {
        let ia = nodes[a].0 - 1;
        let var_a = s1[(a, a)] / (mf - 1.0);
        r_mean.record(a, z_score(mean[a] - analytic.mean[ia], (var_a / mf).sqrt()));
        for b in a..k {
            let ib = nodes[b].0 - 1;
            let c = s1[(a, b)] / mf;
            let se = ((s2[(a, b)] / mf - c * c).max(0.0) / mf).sqrt();
            max_cov_se = max_cov_se.max(se);
            r_cov.record(entry, z_score(s1[(a, b)] / (mf - 1.0) - analytic.cov[(ia, ib)], se));
            if a != b {
                let e = d1[(a, b)] / mf;
                let se_phi = ((d2[(a, b)] / mf - e * e).max(0.0) / mf).sqrt();
                let exact = analytic.cov[(ia, ia)] - 2.0 * analytic.cov[(ia, ib)] + analytic.cov[(ib, ib)];
                r_phi.record(entry, z_score(d1[(a, b)] / (mf - 1.0) - exact, se_phi));
            }
            entry += 1;
        }
    }
    Ok(MonteCarloReport {
        mean: r_mean,
        cov: r_cov,
        phi: r_phi,
        max_cov_stderr: max_cov_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::analytic_phi_matrix;
    use crate::powerflow::NodeStats;

    fn stats_all(n: usize, s: NodeStats) -> InjectionStats {
        let mut v = vec![s; n];
        v[0] = NodeStats::default();
        InjectionStats::new(v).unwrap()
    }

    #[test]
    fn smallest_tree_sweep_is_exact() {
        let reports = theorem_sweep(5, 4..=4, 1).unwrap();
        for r in &reports {
            if r.bound == Bound::AtMost {
                assert!(r.max_abs_residual < 1e-15, "{r}");
            }
        }
    }

    #[test]
    fn sweep_small_batch_passes() {
        for r in theorem_sweep(10, 5..=20, 7).unwrap() {
            assert!(r.passed(), "{r}");
        }
    }

    #[test]
    fn corrupted_impedance_is_detected() {
        let r = corrupted_impedance_check(5, 6..=15, 3, 1.5).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn search_finds_true_tree() {
        let (graph, tree, stats) = random_valid_instance(8, 8, 5).unwrap();
        let leaves = tree.leaves().clone();
        let leaf_list: Vec<NodeId> = leaves.iter().copied().collect();
        let phi = analytic_phi_matrix(&tree, &stats, &leaf_list).unwrap();
        let res = exhaustive_tree_search(&graph, &phi, &stats, &leaves, SearchOptions { enforce_degree_rule: true }).unwrap();
        let zero = res.zero_residual(1e-20);
        assert_eq!(zero.len(), 1);
        assert_eq!(zero[0].edges, tree.edges().to_vec());
    }

    #[test]
    fn single_feasible_tree_is_returned() {
        // root - 1 - {2, 3}, no other lines
        let mut g = CandidateGraph::new(4);
        for (u, v) in [(0, 1), (1, 2), (1, 3)] {
            g.add_edge(NodeId(u), NodeId(v), LineImpedance::new(0.05, 0.02).unwrap()).unwrap();
        }
        let leaves: BTreeSet<NodeId> = [NodeId(2), NodeId(3)].into();
        let phi = PhiMatrix::new(vec![NodeId(2), NodeId(3)], DMatrix::from_row_slice(2, 2, &[0.0, 7.0, 7.0, 0.0])).unwrap();
        let stats = stats_all(4, NodeStats { var_p: 1.0, var_q: 0.5, cov_pq: 0.1, mean_p: 0.0, mean_q: 0.0 });
        let res = exhaustive_tree_search(&g, &phi, &stats, &leaves, SearchOptions::default()).unwrap();
        assert_eq!(res.trees.len(), 1);
        assert_eq!(res.best().edges.len(), 3);
    }

    #[test]
    fn search_limits() {
        let g = CandidateGraph::new(13);
        let phi = PhiMatrix::new(vec![], DMatrix::zeros(0, 0)).unwrap();
        let r = exhaustive_tree_search(&g, &phi, &InjectionStats::zeros(13), &BTreeSet::new(), SearchOptions::default());
        assert!(matches!(r, Err(Error::TooLarge { .. })));
        let g = CandidateGraph::new(3);
        let r = exhaustive_tree_search(&g, &phi, &InjectionStats::zeros(3), &BTreeSet::new(), SearchOptions::default());
        assert!(matches!(r, Err(Error::NoFeasibleTree)));
    }

    #[test]
    fn zero_variance_matches_exactly() {
        let (_, tree, _) = random_valid_instance(6, 0, 2).unwrap();
        let zero = stats_all(tree.node_count(), NodeStats { var_p: 0.0, var_q: 0.0, cov_pq: 0.0, mean_p: -0.5, mean_q: -0.1 });
        let rep = montecarlo_moment_check(&tree, &zero, 1000, 4).unwrap();
        assert!(rep.passed(), "{}\n{}\n{}", rep.mean, rep.cov, rep.phi);
        assert_eq!(rep.cov.max_abs_residual, 0.0);
        assert!(rep.mean.max_abs_residual == 0.0);
    }

    #[test]
    fn stderr_scales_with_sample_count() {
        let (_, tree, stats) = random_valid_instance(8, 0, 9).unwrap();
        let small = montecarlo_moment_check(&tree, &stats, 10_000, 1).unwrap();
        let large = montecarlo_moment_check(&tree, &stats, 160_000, 1).unwrap();
        assert!(small.passed() && large.passed());
        let ratio = small.max_cov_stderr / large.max_cov_stderr;
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }
}
