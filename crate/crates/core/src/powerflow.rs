//! Linear coupled power flow over a radial tree.
//!
//! Voltages are expressed as deviations from the substation (1 p.u., phase 0):
//!
//! ```text
//! v = H_r^{-1} p + H_x^{-1} q        theta = H_x^{-1} p - H_r^{-1} q
//! ```
//!
//! where `H_r`, `H_x` are the root-reduced Laplacians weighted by `1/r` and
//! `1/x`. On a tree, `H_r^{-1}(a, b)` is the resistance shared by the paths of
//! `a` and `b` to the root, which gives an O(depth) formula for every entry.

use std::collections::BTreeSet;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{NodeId, RadialTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// Edge weight `1/r`.
    InverseResistance,
    /// Edge weight `1/x`.
    InverseReactance,
}

impl WeightKind {
    fn pick(self, r: f64, x: f64) -> f64 {
        match self {
            WeightKind::InverseResistance => r,
            WeightKind::InverseReactance => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedLaplacian {
    pub kind: WeightKind,
    /// Row/column `i` belongs to node `i + 1`.
    pub matrix: DMatrix<f64>,
}

/// Weighted Laplacian with the substation row and column removed.
pub fn reduced_laplacian(tree: &RadialTree, kind: WeightKind) -> ReducedLaplacian {
    let n = tree.node_count() - 1;
    let mut h = DMatrix::zeros(n, n);
    for v in tree.non_root_nodes() {
        let p = tree.parent(v).expect("non-root node has a parent");
        let z = tree.impedance_to_parent(v).expect("tree edge has impedance");
        let w = 1.0 / kind.pick(z.r, z.x);
        let i = v.0 - 1;
        h[(i, i)] += w;
        if let Some(j) = p.reduced_index() {
            h[(j, j)] += w;
            h[(i, j)] -= w;
            h[(j, i)] -= w;
        }
    }
    ReducedLaplacian { kind, matrix: h }
}

/// `H^{-1}(a, b)` as the weight summed over the edges common to both root paths.
pub fn hinv_entry_pathsum(tree: &RadialTree, a: NodeId, b: NodeId, kind: WeightKind) -> Result<f64> {
    for v in [a, b] {
        if !tree.contains(v) {
            return Err(Error::UnknownNode(v));
        }
        if v.is_root() {
            return Err(Error::RootNotAllowed);
        }
    }
    let s = tree.path_impedance(tree.lca(a, b), NodeId::ROOT)?;
    Ok(kind.pick(s.r_sum, s.x_sum))
}

/// Full inverse assembled from path sums in O(N^2).
pub fn hinv_pathsum_matrix(tree: &RadialTree, kind: WeightKind) -> DMatrix<f64> {
    let n = tree.node_count() - 1;
    // depth-ordered accumulation: entry (a, b) = pathsum(lca(a, b))
    let mut to_root = vec![0.0; n + 1];
    let mut order: Vec<NodeId> = tree.non_root_nodes().collect();
    order.sort_by_key(|v| tree.depth(*v));
    for &v in &order {
        let p = tree.parent(v).expect("non-root");
        let z = tree.impedance_to_parent(v).expect("tree edge");
        to_root[v.0] = to_root[p.0] + kind.pick(z.r, z.x);
    }
    let mut m = DMatrix::zeros(n, n);
    for a in tree.non_root_nodes() {
        for b in tree.non_root_nodes().filter(|b| *b >= a) {
            let val = to_root[tree.lca(a, b).0];
            m[(a.0 - 1, b.0 - 1)] = val;
            m[(b.0 - 1, a.0 - 1)] = val;
        }
    }
    m
}

/// Numerical inverse of the reduced Laplacian through a Cholesky factorization.
/// Exists as an independent check on the path-sum formula.
pub fn hinv_dense(tree: &RadialTree, kind: WeightKind) -> Result<DMatrix<f64>> {
    let h = reduced_laplacian(tree, kind).matrix;
    let chol = h.cholesky().ok_or(Error::SingularMatrix)?;
    Ok(chol.inverse())
}

/// Second moments and means of one node's injections.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeStats {
    pub var_p: f64,
    pub var_q: f64,
    pub cov_pq: f64,
    pub mean_p: f64,
    pub mean_q: f64,
}

impl NodeStats {
    pub fn is_psd(&self) -> bool {
        // small slack for values that went through text round trips
        let slack = 1e-12 * (self.var_p * self.var_q).abs().max(f64::MIN_POSITIVE);
        self.var_p >= 0.0
            && self.var_q >= 0.0
            && self.cov_pq * self.cov_pq <= self.var_p * self.var_q + slack
            && [self.var_p, self.var_q, self.cov_pq, self.mean_p, self.mean_q]
                .iter()
                .all(|v| v.is_finite())
    }

    /// Lower Cholesky factor `[[l11, 0], [l21, l22]]` of the 2x2 covariance.
    fn cholesky2(&self) -> (f64, f64, f64) {
        let l11 = self.var_p.sqrt();
        if l11 > 0.0 {
            let l21 = self.cov_pq / l11;
            let l22 = (self.var_q - l21 * l21).max(0.0).sqrt();
            (l11, l21, l22)
        } else {
            (0.0, 0.0, self.var_q.sqrt())
        }
    }
}

/// Injection statistics for every node, indexed by node id. Fluctuations at
/// different nodes are uncorrelated; the root entry is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionStats {
    nodes: Vec<NodeStats>,
}

impl InjectionStats {
    pub fn new(nodes: Vec<NodeStats>) -> Result<Self> {
        for (i, s) in nodes.iter().enumerate().skip(1) {
            if !s.is_psd() {
                return Err(Error::NonPsdStats(NodeId(i)));
            }
        }
        Ok(Self { nodes })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            nodes: vec![NodeStats::default(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, v: NodeId) -> &NodeStats {
        &self.nodes[v.0]
    }

    pub fn set(&mut self, v: NodeId, s: NodeStats) -> Result<()> {
        if !s.is_psd() {
            return Err(Error::NonPsdStats(v));
        }
        self.nodes[v.0] = s;
        Ok(())
    }

    pub fn as_slice(&self) -> &[NodeStats] {
        &self.nodes
    }
}

/// Analytic voltage means and covariance over non-root nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl VoltageMoments {
    pub fn cov_entry(&self, a: NodeId, b: NodeId) -> f64 {
        self.cov[(a.0 - 1, b.0 - 1)]
    }
}

fn check_stats(tree: &RadialTree, stats: &InjectionStats) -> Result<()> {
    if stats.len() != tree.node_count() {
        return Err(Error::DimensionMismatch {
            expected: tree.node_count(),
            got: stats.len(),
        });
    }
    Ok(())
}

/// Means and covariance of voltage magnitudes implied by the injection statistics.
pub fn analytic_voltage_moments(tree: &RadialTree, stats: &InjectionStats) -> Result<VoltageMoments> {
    check_stats(tree, stats)?;
    let hr = hinv_pathsum_matrix(tree, WeightKind::InverseResistance);
    let hx = hinv_pathsum_matrix(tree, WeightKind::InverseReactance);
    let n = hr.nrows();
    let s = &stats.as_slice()[1..];
    let mu_p = DVector::from_iterator(n, s.iter().map(|s| s.mean_p));
    let mu_q = DVector::from_iterator(n, s.iter().map(|s| s.mean_q));
    let mean = &hr * mu_p + &hx * mu_q;

    // Column-scaled copies: (H D)(i, d) = H(i, d) * D(d)
    let scale = |h: &DMatrix<f64>, f: &dyn Fn(&NodeStats) -> f64| {
        let mut out = h.clone();
        for (d, st) in s.iter().enumerate() {
            out.column_mut(d).scale_mut(f(st));
        }
        out
    };
    let hr_p = scale(&hr, &|s| s.var_p);
    let hx_q = scale(&hx, &|s| s.var_q);
    let hr_pq = scale(&hr, &|s| s.cov_pq);
    let cross = &hr_pq * &hx;
    let mut cov = &hr_p * &hr + &hx_q * &hx + &cross + cross.transpose();
    // exact symmetry
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = m;
            cov[(j, i)] = m;
        }
    }
    Ok(VoltageMoments { mean, cov })
}

/// Factorized LC-PF model for repeated solves.
pub struct LcpfSolver {
    chol_r: Cholesky<f64, Dyn>,
    chol_x: Cholesky<f64, Dyn>,
}

impl LcpfSolver {
    pub fn new(tree: &RadialTree) -> Result<Self> {
        let chol = |k| {
            reduced_laplacian(tree, k)
                .matrix
                .cholesky()
                .ok_or(Error::SingularMatrix)
        };
        Ok(Self {
            chol_r: chol(WeightKind::InverseResistance)?,
            chol_x: chol(WeightKind::InverseReactance)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.chol_r.l_dirty().nrows()
    }

    /// Returns `(v, theta)` for injections `(p, q)` over non-root nodes.
    pub fn solve(&self, p: &DVector<f64>, q: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let n = self.dim();
        for got in [p.len(), q.len()] {
            if got != n {
                return Err(Error::DimensionMismatch { expected: n, got });
            }
        }
        let rp = self.chol_r.solve(p);
        let rq = self.chol_r.solve(q);
        let xp = self.chol_x.solve(p);
        let xq = self.chol_x.solve(q);
        Ok((rp + xq, xp - rq))
    }

    /// Rows of `H_r^{-1}` and `H_x^{-1}` for the given nodes, via solves
    /// against unit vectors (the inverses are symmetric).
    fn transfer_rows(&self, nodes: &[NodeId]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let n = self.dim();
        let mut rhs = DMatrix::zeros(n, nodes.len());
        for (j, v) in nodes.iter().enumerate() {
            let i = v.reduced_index().ok_or(Error::RootNotAllowed)?;
            if i >= n {
                return Err(Error::UnknownNode(*v));
            }
            rhs[(i, j)] = 1.0;
        }
        Ok((
            self.chol_r.solve(&rhs).transpose(),
            self.chol_x.solve(&rhs).transpose(),
        ))
    }
}

/// Solves the LC-PF model once.
pub fn lcpf_solve(
    tree: &RadialTree,
    p: &DVector<f64>,
    q: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    LcpfSolver::new(tree)?.solve(p, q)
}

/// Shape of the standardized per-node injection noise. All options have zero
/// mean and unit variance, so second moments match the given statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InjectionDistribution {
    #[default]
    Gaussian,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    Uniform,
    /// `+1` or `-1` with equal probability.
    TwoPoint,
}

impl InjectionDistribution {
    #[inline]
    fn draw<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            InjectionDistribution::Gaussian => StandardNormal.sample(rng),
            InjectionDistribution::Uniform => {
                let s = 3f64.sqrt();
                rng.random_range(-s..s)
            }
            InjectionDistribution::TwoPoint => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InjectionDistribution::Gaussian => "gaussian",
            InjectionDistribution::Uniform => "uniform",
            InjectionDistribution::TwoPoint => "two-point",
        }
    }
}

impl std::str::FromStr for InjectionDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "uniform" => Ok(Self::Uniform),
            "two-point" => Ok(Self::TwoPoint),
            other => Err(Error::Config(format!("unknown distribution '{other}'"))),
        }
    }
}

/// `m` observations of voltage deviations at a fixed set of nodes, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    observed: Vec<NodeId>,
    values: Vec<f64>,
}

impl SampleMatrix {
    pub fn new(observed: Vec<NodeId>, values: Vec<f64>) -> Result<Self> {
        let k = observed.len();
        if k == 0 || !values.len().is_multiple_of(k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: values.len(),
            });
        }
        Ok(Self { observed, values })
    }

    pub fn observed(&self) -> &[NodeId] {
        &self.observed
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.observed.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.observed.len();
        &self.values[i * k..(i + 1) * k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Samples per independently seeded shard.
pub const SHARD_SIZE: usize = 8192;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of shard `index`: `splitmix64(seed ^ splitmix64(index))`.
pub fn shard_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// Draws `m` independent injection vectors, solves LC-PF for each and keeps
/// the voltage deviations at `observed`.
///
/// Samples are generated in shards of [`SHARD_SIZE`]; shard `i` uses a
/// ChaCha8 stream seeded with [`shard_seed`]`(seed, i)`, so the output depends
/// only on `(seed, m)` and not on the number of worker threads.
pub fn sample_voltages(
    tree: &RadialTree,
    stats: &InjectionStats,
    m: usize,
    seed: u64,
    observed: &BTreeSet<NodeId>,
    dist: InjectionDistribution,
) -> Result<SampleMatrix> {
    check_stats(tree, stats)?;
    for v in tree.non_root_nodes() {
        if !stats.get(v).is_psd() {
            return Err(Error::NonPsdStats(v));
        }
    }
    if m == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let obs: Vec<NodeId> = observed.iter().copied().collect();
    let solver = LcpfSolver::new(tree)?;
    let (tr, tx) = solver.transfer_rows(&obs)?;
    let n = solver.dim();
    let k = obs.len();
    let chol: Vec<(f64, f64, f64)> = stats.as_slice()[1..].iter().map(|s| s.cholesky2()).collect();
    let moments = analytic_voltage_moments(tree, stats)?;
    let base: Vec<f64> = obs.iter().map(|v| moments.mean[v.0 - 1]).collect();

    let shards = m.div_ceil(SHARD_SIZE);
    let mut values = vec![0.0; m * k];
    values
        .par_chunks_mut(SHARD_SIZE * k)
        .zip(0..shards)
        .for_each(|(chunk, shard)| {
            let mut rng = ChaCha8Rng::seed_from_u64(shard_seed(seed, shard as u64));
            let mut dp = vec![0.0; n];
            let mut dq = vec![0.0; n];
            for row in chunk.chunks_mut(k) {
                for d in 0..n {
                    let (l11, l21, l22) = chol[d];
                    let z1 = dist.draw(&mut rng);
                    let z2 = dist.draw(&mut rng);
                    dp[d] = l11 * z1;
                    dq[d] = l21 * z1 + l22 * z2;
                }
                for (j, out) in row.iter_mut().enumerate() {
                    let mut acc = base[j];
                    for d in 0..n {
                        acc += tr[(j, d)] * dp[d] + tx[(j, d)] * dq[d];
                    }
                    *out = acc;
                }
            }
        });
    SampleMatrix::new(obs, values)
}
