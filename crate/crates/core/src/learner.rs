//! Topology learning from terminal-node statistics.
//!
//! The operational tree is rebuilt from the leaves towards the substation in
//! three stages:
//!
//! 1. **Leaf pairs.** Two terminals `a`, `c` with a common parent `b` satisfy
//!    `phi_ac = Var(r_ab p_a + x_ab q_a) + Var(r_bc p_c + x_bc q_c)`. Every
//!    `(b, c)` with candidate lines `(a b)`, `(b c)` is tested.
//! 2. **Intermediates.** A discovered node `k` remembers two terminals `a`, `b`
//!    below a common parent `k1` and the impedance of its chain `k1 .. k`. For a
//!    candidate parent `k2` and a terminal `c` meeting that chain at `k2`,
//!    `phi_ac - phi_bc` has a closed form in the path sums from `a`, `b`, `k1`
//!    to `k2`, which is checked for the candidate line `(k k2)`. Iterates
//!    until no new parent is found; a single remaining parentless node is
//!    joined to the substation.
//! 3. **Remaining leaves.** Terminals without a leaf sibling are attached to
//!    the first discovered node, in post-order, whose triple identity holds.
//!
//! All tests use the candidate-line impedances, so every emitted edge is a
//! candidate line.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{edge_key, post_order, validate_tree, CandidateGraph, EdgeKey, LineImpedance, NodeId};
use crate::moments::{sibling_rhs, triple_rhs, PhiMatrix};
use crate::powerflow::{InjectionStats, NodeStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchRule {
    /// Accept the first candidate within tolerance, in ascending id order.
    FirstPass,
    /// Among all candidates within tolerance, take the smallest residual.
    #[default]
    MinResidual,
}

impl std::str::FromStr for MatchRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first-pass" => Ok(Self::FirstPass),
            "min-residual" => Ok(Self::MinResidual),
            other => Err(Error::Config(format!("unknown match rule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualMode {
    /// `|lhs - rhs|`
    #[default]
    Absolute,
    /// `|lhs - rhs| / max(|lhs|, |rhs|)`
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    /// Tolerance for the leaf-pair identity.
    pub tau1: f64,
    /// Tolerance for the triple identity.
    pub tau2: f64,
    pub match_rule: MatchRule,
    pub residual_mode: ResidualMode,
}

impl LearnerConfig {
    pub fn new(tau1: f64, tau2: f64) -> Result<Self> {
        let cfg = Self {
            tau1,
            tau2,
            match_rule: MatchRule::default(),
            residual_mode: ResidualMode::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_match_rule(mut self, rule: MatchRule) -> Self {
        self.match_rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau1 > 0.0 && self.tau2 > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "tolerances must be positive (tau1={}, tau2={})",
                self.tau1, self.tau2
            )))
        }
    }

    fn residual(&self, lhs: f64, rhs: f64) -> f64 {
        let d = (lhs - rhs).abs();
        match self.residual_mode {
            ResidualMode::Absolute => d,
            ResidualMode::Relative => d / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    LeafPair,
    Intermediate,
    LeafPlacement,
    RootJoin,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::LeafPair => "leaf-pair",
            Stage::Intermediate => "intermediate",
            Stage::LeafPlacement => "leaf-placement",
            Stage::RootJoin => "root-join",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "leaf-pair" => Ok(Stage::LeafPair),
            "intermediate" => Ok(Stage::Intermediate),
            "leaf-placement" => Ok(Stage::LeafPlacement),
            "root-join" => Ok(Stage::RootJoin),
            other => Err(Error::Config(format!("unknown stage '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeProvenance {
    pub stage: Stage,
    pub residual: f64,
}

/// Everything the learner is allowed to see.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    phi: &'a PhiMatrix,
    leaf_stats: Vec<NodeStats>,
    graph: &'a CandidateGraph,
    leaves: &'a BTreeSet<NodeId>,
    missing: &'a BTreeSet<NodeId>,
}

impl<'a> Problem<'a> {
    /// Only the statistics of `leaves` are read from `stats`.
    pub fn new(
        phi: &'a PhiMatrix,
        stats: &InjectionStats,
        graph: &'a CandidateGraph,
        leaves: &'a BTreeSet<NodeId>,
        missing: &'a BTreeSet<NodeId>,
    ) -> Result<Self> {
        let n = graph.node_count();
        if stats.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: stats.len(),
            });
        }
        let mut seen = vec![false; n];
        seen[0] = true;
        for v in leaves.iter().chain(missing.iter()) {
            if v.0 >= n {
                return Err(Error::UnknownNode(*v));
            }
            if std::mem::replace(&mut seen[v.0], true) {
                return Err(Error::Config(format!(
                    "node {v} listed twice among leaves, missing nodes and the root"
                )));
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::Config(format!(
                "node {v} is neither a leaf nor a missing node"
            )));
        }
        if let Some(v) = leaves.iter().find(|v| phi.index_of(**v).is_none()) {
            return Err(Error::Config(format!("phi has no entry for leaf {v}")));
        }
        let mut leaf_stats = vec![NodeStats::default(); n];
        for v in leaves {
            leaf_stats[v.0] = *stats.get(*v);
        }
        Ok(Self {
            phi,
            leaf_stats,
            graph,
            leaves,
            missing,
        })
    }

    #[inline]
    fn phi(&self, a: NodeId, b: NodeId) -> f64 {
        self.phi.get(a, b)
    }

    #[inline]
    fn z(&self, u: NodeId, v: NodeId) -> Option<LineImpedance> {
        self.graph.impedance(u, v)
    }
}

/// Learner state between stages.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialForest {
    par: Vec<Option<NodeId>>,
    des: Vec<Option<(NodeId, NodeId)>>,
    /// `(r, x)` summed over the discovered chain from `par(des.0)` up to the node.
    chain: Vec<(f64, f64)>,
    children: Vec<Vec<NodeId>>,
    edges: BTreeMap<EdgeKey, EdgeProvenance>,
    diagnostics: Vec<String>,
}

impl PartialForest {
    fn new(n: usize) -> Self {
        Self {
            par: vec![None; n],
            des: vec![None; n],
            chain: vec![(0.0, 0.0); n],
            children: vec![Vec::new(); n],
            edges: BTreeMap::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn par(&self, v: NodeId) -> Option<NodeId> {
        self.par[v.0]
    }

    /// The two recorded terminal descendants of `v`.
    pub fn des(&self, v: NodeId) -> Option<(NodeId, NodeId)> {
        self.des[v.0]
    }

    pub fn edges(&self) -> &BTreeMap<EdgeKey, EdgeProvenance> {
        &self.edges
    }

    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    fn set_par(&mut self, v: NodeId, p: NodeId) {
        debug_assert!(self.par[v.0].is_none(), "parent of {v} written twice");
        self.par[v.0] = Some(p);
        self.children[p.0].push(v);
    }

    fn set_des(&mut self, v: NodeId, des: (NodeId, NodeId), chain: (f64, f64)) {
        debug_assert!(self.des[v.0].is_none(), "descendants of {v} written twice");
        self.des[v.0] = Some(des);
        self.chain[v.0] = chain;
    }

    fn add_edge(&mut self, u: NodeId, v: NodeId, stage: Stage, residual: f64) {
        self.edges
            .entry(edge_key(u, v))
            .or_insert(EdgeProvenance { stage, residual });
    }

    /// Marks `k` and every node whose discovered parent chain reaches `k`.
    fn subtree_mask(&self, k: NodeId) -> Vec<bool> {
        let mut mask = vec![false; self.par.len()];
        let mut stack = vec![k];
        while let Some(v) = stack.pop() {
            mask[v.0] = true;
            stack.extend(self.children[v.0].iter().copied());
        }
        mask
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyStatus {
    Complete,
    Partial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedTopology {
    pub node_count: usize,
    pub edges: BTreeMap<EdgeKey, EdgeProvenance>,
    pub status: TopologyStatus,
    pub diagnostics: Vec<String>,
}

impl LearnedTopology {
    pub fn edge_keys(&self) -> Vec<EdgeKey> {
        self.edges.keys().copied().collect()
    }
}

/// Running choice among candidates, honoring the match rule.
struct Pick<T> {
    rule: MatchRule,
    tau: f64,
    best: Option<(f64, T)>,
}

impl<T> Pick<T> {
    fn new(rule: MatchRule, tau: f64) -> Self {
        Self { rule, tau, best: None }
    }

    /// Returns true once the search can stop.
    fn offer(&mut self, residual: f64, item: T) -> bool {
        if residual.is_nan() || residual > self.tau {
            return false;
        }
        match self.rule {
            MatchRule::FirstPass => {
                self.best = Some((residual, item));
                true
            }
            MatchRule::MinResidual => {
                if self.best.as_ref().is_none_or(|(r, _)| residual < *r) {
                    self.best = Some((residual, item));
                }
                false
            }
        }
    }
}

/// Terminal pairs and their common missing parent.
pub fn stage1_leaf_pairs(p: &Problem, cfg: &LearnerConfig) -> PartialForest {
    let mut st = PartialForest::new(p.graph.node_count());
    for &a in p.leaves {
        if st.par(a).is_some() {
            continue;
        }
        let sa = &p.leaf_stats[a.0];
        let mut pick = Pick::new(cfg.match_rule, cfg.tau1);
        'search: for &b in p.missing {
            let Some(z_ab) = p.z(a, b) else { continue };
            for &c in p.leaves {
                if c == a || st.par(c).is_some_and(|pc| pc != b) {
                    continue;
                }
                let Some(z_bc) = p.z(b, c) else { continue };
                let rhs = sibling_rhs(z_ab, z_bc, sa, &p.leaf_stats[c.0]);
                let res = cfg.residual(p.phi(a, c), rhs);
                if pick.offer(res, (b, c)) {
                    break 'search;
                }
            }
        }
        if let Some((res, (b, c))) = pick.best {
            st.add_edge(a, b, Stage::LeafPair, res);
            st.add_edge(b, c, Stage::LeafPair, res);
            st.set_par(a, b);
            if st.par(c).is_none() {
                st.set_par(c, b);
            }
            if st.des(b).is_none() {
                st.set_des(b, (a.min(c), a.max(c)), (0.0, 0.0));
            }
        }
    }
    st
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stage2Outcome {
    /// Exactly one parentless discovered node remained and was joined to the root.
    RootJoined { iterations: usize },
    /// One parentless node remained but there is no candidate line to the root.
    RootUnreachable { node: NodeId, iterations: usize },
    /// No discovered node could be attached in the last pass and several remain.
    Stalled { parentless: Vec<NodeId>, iterations: usize },
    /// Stage 1 discovered nothing.
    Empty,
}

/// Path sums for the triple identity of a discovered node `k` extended by a
/// line of impedance `z` to a candidate ancestor.
#[derive(Clone, Copy)]
struct TripleBase {
    a: NodeId,
    b: NodeId,
    za: (f64, f64),
    zb: (f64, f64),
    chain: (f64, f64),
}

impl TripleBase {
    fn of(st: &PartialForest, p: &Problem, k: NodeId) -> Option<Self> {
        let (a, b) = st.des(k)?;
        let k1 = st.par(a)?;
        let za = p.z(a, k1)?;
        let zb = p.z(b, k1)?;
        Some(Self {
            a,
            b,
            za: (za.r, za.x),
            zb: (zb.r, zb.x),
            chain: st.chain[k.0],
        })
    }

    /// Residual of the triple identity with terminal `c` and extra path `ext`.
    fn residual(&self, p: &Problem, cfg: &LearnerConfig, c: NodeId, ext: (f64, f64)) -> f64 {
        let k1 = (self.chain.0 + ext.0, self.chain.1 + ext.1);
        let pa = (self.za.0 + k1.0, self.za.1 + k1.1);
        let pb = (self.zb.0 + k1.0, self.zb.1 + k1.1);
        let rhs = triple_rhs(pa, pb, k1, &p.leaf_stats[self.a.0], &p.leaf_stats[self.b.0]);
        cfg.residual(p.phi(self.a, c) - p.phi(self.b, c), rhs)
    }
}

/// Iteratively attaches discovered intermediate nodes to their parents.
pub fn stage2_intermediates(
    mut st: PartialForest,
    p: &Problem,
    cfg: &LearnerConfig,
) -> (PartialForest, Stage2Outcome) {
    let parentless = |st: &PartialForest| -> Vec<NodeId> {
        p.missing
            .iter()
            .copied()
            .filter(|k| st.par(*k).is_none() && st.des(*k).is_some())
            .collect()
    };
    let mut prev_m1: BTreeSet<NodeId> = BTreeSet::new();
    let mut iterations = 0;
    loop {
        let m1 = parentless(&st);
        if m1.is_empty() {
            break;
        }
        let m1_set: BTreeSet<NodeId> = m1.iter().copied().collect();
        let m2: BTreeSet<NodeId> = m1_set.difference(&prev_m1).copied().collect();
        iterations += 1;
        let mut found = 0;
        for &k in &m1 {
            let Some(base) = TripleBase::of(&st, p, k) else {
                continue;
            };
            let in_subtree = st.subtree_mask(k);

            // candidate parents that already carry descendants
            let mut known = Pick::new(cfg.match_rule, cfg.tau2);
            for &k2 in p.missing {
                if in_subtree[k2.0] {
                    continue;
                }
                let Some((c, _)) = st.des(k2) else { continue };
                if m1_set.contains(&k2) && !m2.contains(&k) && !m2.contains(&k2) {
                    // same pair already tested in an earlier pass
                    continue;
                }
                let Some(z) = p.z(k, k2) else { continue };
                let res = base.residual(p, cfg, c, (z.r, z.x));
                if known.offer(res, (k2, z)) {
                    break;
                }
            }

            // undiscovered candidate parents, probed with terminals outside k's subtree;
            // these candidates only shrink, so nodes seen in an earlier pass are skipped.
            // Under first-pass they are only tried when the search above failed.
            let mut fresh = Pick::new(cfg.match_rule, cfg.tau2);
            let try_fresh = m2.contains(&k) && (known.best.is_none() || cfg.match_rule == MatchRule::MinResidual);
            if try_fresh {
                'search: for &k2 in p.missing {
                    if st.des(k2).is_some() {
                        continue;
                    }
                    let Some(z) = p.z(k, k2) else { continue };
                    for &c in p.leaves {
                        if st.par(c).is_some_and(|pc| in_subtree[pc.0]) {
                            continue;
                        }
                        let res = base.residual(p, cfg, c, (z.r, z.x));
                        if fresh.offer(res, (k2, z)) {
                            break 'search;
                        }
                    }
                }
            }
            let fresh_wins = match (&known.best, &fresh.best) {
                (_, None) => false,
                (None, Some(_)) => true,
                (Some((rk, _)), Some((rf, _))) => rf < rk,
            };
            if fresh_wins {
                let (res, (k2, z)) = fresh.best.expect("checked above");
                st.add_edge(k, k2, Stage::Intermediate, res);
                st.set_par(k, k2);
                let chain = (base.chain.0 + z.r, base.chain.1 + z.x);
                st.set_des(k2, (base.a, base.b), chain);
                found += 1;
            } else if let Some((res, (k2, _))) = known.best {
                st.add_edge(k, k2, Stage::Intermediate, res);
                st.set_par(k, k2);
                found += 1;
            }
        }
        prev_m1 = m1_set;
        if found == 0 {
            break;
        }
    }

    let remaining = parentless(&st);
    let outcome = match remaining.as_slice() {
        [] => {
            if p.missing.iter().all(|k| st.des(*k).is_none()) {
                st.diagnostics
                    .push("no leaf pair was matched; nothing to grow".to_string());
                Stage2Outcome::Empty
            } else {
                Stage2Outcome::RootJoined { iterations }
            }
        }
        [k] => {
            if p.graph.has_edge(*k, NodeId::ROOT) {
                st.add_edge(*k, NodeId::ROOT, Stage::RootJoin, 0.0);
                st.set_par(*k, NodeId::ROOT);
                Stage2Outcome::RootJoined { iterations }
            } else {
                st.diagnostics
                    .push(format!("root join: no candidate line between {k} and the root"));
                Stage2Outcome::RootUnreachable { node: *k, iterations }
            }
        }
        many => {
            st.diagnostics.push(format!(
                "stalled after {iterations} passes with {} parentless nodes: {}",
                many.len(),
                many.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            ));
            Stage2Outcome::Stalled {
                parentless: many.to_vec(),
                iterations,
            }
        }
    };
    (st, outcome)
}

/// Attaches the remaining terminals and assembles the result.
pub fn stage3_place_leaves(mut st: PartialForest, p: &Problem, cfg: &LearnerConfig) -> LearnedTopology {
    let forest: BTreeMap<NodeId, Option<NodeId>> = p
        .missing
        .iter()
        .copied()
        .filter(|k| st.des(*k).is_some())
        .map(|k| (k, st.par(k)))
        .collect();
    let mut order = match post_order(&forest) {
        Ok(o) => o,
        Err(e) => {
            st.diagnostics.push(format!("post-order failed: {e}"));
            Vec::new()
        }
    };
    let pending: Vec<NodeId> = p.leaves.iter().copied().filter(|c| st.par(*c).is_none()).collect();
    for c in pending {
        let mut placed = None;
        for (j, &k2) in order.iter().enumerate() {
            let Some(z) = p.z(c, k2) else { continue };
            let Some(base) = TripleBase::of(&st, p, k2) else {
                continue;
            };
            let res = base.residual(p, cfg, c, (0.0, 0.0));
            if res <= cfg.tau2 {
                placed = Some((j, k2, res, z));
                break;
            }
        }
        match placed {
            Some((j, k2, res, _)) => {
                st.add_edge(c, k2, Stage::LeafPlacement, res);
                st.set_par(c, k2);
                order.remove(j);
            }
            None => st.diagnostics.push(format!("unplaced leaf {c}")),
        }
    }

    let n = p.graph.node_count();
    let edges: Vec<EdgeKey> = st.edges.keys().copied().collect();
    let all_attached = (1..n).all(|v| st.par[v].is_some());
    let status = if all_attached {
        match validate_tree(p.graph, &edges, p.leaves) {
            Ok(_) => TopologyStatus::Complete,
            Err(e) => {
                st.diagnostics.push(format!("learned edges rejected: {e}"));
                TopologyStatus::Partial
            }
        }
    } else {
        let unattached: Vec<String> = (1..n)
            .filter(|v| st.par[*v].is_none())
            .map(|v| v.to_string())
            .collect();
        st.diagnostics
            .push(format!("nodes without a parent: {}", unattached.join(",")));
        TopologyStatus::Partial
    };
    LearnedTopology {
        node_count: n,
        edges: st.edges,
        status,
        diagnostics: st.diagnostics,
    }
}

/// Runs all three stages.
pub fn learn_topology(p: &Problem, cfg: &LearnerConfig) -> Result<LearnedTopology> {
    cfg.validate()?;
    let st = stage1_leaf_pairs(p, cfg);
    let (st, _) = stage2_intermediates(st, p, cfg);
    Ok(stage3_place_leaves(st, p, cfg))
}

impl fmt::Display for TopologyStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TopologyStatus::Complete => "complete",
            TopologyStatus::Partial => "partial",
        })
    }
}
