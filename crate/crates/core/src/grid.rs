//! Candidate graphs, operational radial trees and path queries.
//!
//! Nodes are dense integers. Node `0` is the substation, which acts as the
//! reference bus and has no row in any reduced matrix; row `i - 1` of a reduced
//! matrix belongs to node `i`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result, TreeViolation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0
    }

    #[inline]
    pub fn is_root(self) -> bool {
        self == NodeId::ROOT
    }

    /// Row of this node in a root-reduced matrix.
    #[inline]
    pub fn reduced_index(self) -> Option<usize> {
        self.0.checked_sub(1)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Unordered edge stored with the smaller endpoint first.
pub type EdgeKey = (NodeId, NodeId);

#[inline]
pub fn edge_key(u: NodeId, v: NodeId) -> EdgeKey {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Series impedance of a line in per-unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineImpedance {
    pub r: f64,
    pub x: f64,
}

impl LineImpedance {
    pub fn new(r: f64, x: f64) -> Result<Self> {
        if r > 0.0 && x > 0.0 && r.is_finite() && x.is_finite() {
            Ok(Self { r, x })
        } else {
            Err(Error::NonPositiveImpedance { r, x })
        }
    }

    /// Conductance-like coefficient `r / (r^2 + x^2)` of the linearized flow equations.
    pub fn g(&self) -> f64 {
        self.r / (self.r * self.r + self.x * self.x)
    }

    /// Susceptance-like coefficient `x / (r^2 + x^2)` of the linearized flow equations.
    pub fn beta(&self) -> f64 {
        self.x / (self.r * self.r + self.x * self.x)
    }
}

/// The loopy set of all lines that could be switched on.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGraph {
    n: usize,
    edges: BTreeMap<EdgeKey, LineImpedance>,
    lookup: Vec<Option<LineImpedance>>,
}

impl CandidateGraph {
    /// Empty graph over nodes `0..n`.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            edges: BTreeMap::new(),
            lookup: vec![None; n * n],
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.n).map(NodeId)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.0 < self.n
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId, z: LineImpedance) -> Result<()> {
        for w in [u, v] {
            if !self.contains(w) {
                return Err(Error::UnknownNode(w));
            }
        }
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        let key = edge_key(u, v);
        if self.edges.contains_key(&key) {
            return Err(Error::DuplicateEdge(key.0, key.1));
        }
        self.edges.insert(key, z);
        self.lookup[u.0 * self.n + v.0] = Some(z);
        self.lookup[v.0 * self.n + u.0] = Some(z);
        Ok(())
    }

    #[inline]
    pub fn impedance(&self, u: NodeId, v: NodeId) -> Option<LineImpedance> {
        if u.0 < self.n && v.0 < self.n {
            self.lookup[u.0 * self.n + v.0]
        } else {
            None
        }
    }

    #[inline]
    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.impedance(u, v).is_some()
    }

    /// Edges in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeKey, LineImpedance)> + '_ {
        self.edges.iter().map(|(k, z)| (*k, *z))
    }
}

/// Impedance accumulated along a tree path from `node` up to `ancestor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSummary {
    pub ancestor: NodeId,
    pub node: NodeId,
    pub r_sum: f64,
    pub x_sum: f64,
}

/// Operational spanning tree rooted at the substation.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTree {
    parent: Vec<Option<NodeId>>,
    to_parent: Vec<Option<LineImpedance>>,
    children: Vec<Vec<NodeId>>,
    depth: Vec<usize>,
    leaves: BTreeSet<NodeId>,
    missing: BTreeSet<NodeId>,
    edges: Vec<EdgeKey>,
}

impl RadialTree {
    /// Builds a tree from operational edges, checking only that they form a
    /// spanning tree of the candidate graph. Terminal (degree-one, non-root)
    /// nodes become the leaf set; all other non-root nodes are missing.
    pub fn from_edges(graph: &CandidateGraph, edges: &[EdgeKey]) -> Result<Self> {
        let violations = structural_violations(graph, edges);
        if !violations.is_empty() {
            return Err(Error::InvalidTree(violations));
        }
        Ok(Self::build(graph, edges))
    }

    fn build(graph: &CandidateGraph, edges: &[EdgeKey]) -> Self {
        let n = graph.node_count();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            adj[u.0].push(v);
            adj[v.0].push(u);
        }
        for list in adj.iter_mut() {
            list.sort();
        }
        let mut parent = vec![None; n];
        let mut to_parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut depth = vec![0; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([NodeId::ROOT]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u.0] {
                if !seen[v.0] {
                    seen[v.0] = true;
                    parent[v.0] = Some(u);
                    to_parent[v.0] = graph.impedance(u, v);
                    depth[v.0] = depth[u.0] + 1;
                    children[u.0].push(v);
                    queue.push_back(v);
                }
            }
        }
        let mut leaves = BTreeSet::new();
        let mut missing = BTreeSet::new();
        for (v, nb) in adj.iter().enumerate().skip(1) {
            if nb.len() == 1 {
                leaves.insert(NodeId(v));
            } else {
                missing.insert(NodeId(v));
            }
        }
        let mut edges: Vec<EdgeKey> = edges.iter().map(|&(u, v)| edge_key(u, v)).collect();
        edges.sort();
        Self {
            parent,
            to_parent,
            children,
            depth,
            leaves,
            missing,
            edges,
        }
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count()).map(NodeId)
    }

    pub fn non_root_nodes(&self) -> impl Iterator<Item = NodeId> {
        (1..self.node_count()).map(NodeId)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.0 < self.node_count()
    }

    fn check(&self, v: NodeId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownNode(v))
        }
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent.get(v.0).copied().flatten()
    }

    /// Impedance of the line from `v` to its parent.
    pub fn impedance_to_parent(&self, v: NodeId) -> Option<LineImpedance> {
        self.to_parent.get(v.0).copied().flatten()
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v.0]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.children[v.0].len() + usize::from(self.parent(v).is_some())
    }

    pub fn depth(&self, v: NodeId) -> usize {
        self.depth[v.0]
    }

    /// Terminal nodes.
    pub fn leaves(&self) -> &BTreeSet<NodeId> {
        &self.leaves
    }

    /// Non-root, non-terminal nodes.
    pub fn missing(&self) -> &BTreeSet<NodeId> {
        &self.missing
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.leaves.contains(&v)
    }

    /// Operational edges in canonical order.
    pub fn edges(&self) -> &[EdgeKey] {
        &self.edges
    }

    /// True if `anc` lies on the path from `v` to the root (a node is its own ancestor).
    pub fn is_ancestor(&self, anc: NodeId, v: NodeId) -> bool {
        let mut cur = v;
        loop {
            if cur == anc {
                return true;
            }
            if self.depth[cur.0] <= self.depth[anc.0] {
                return false;
            }
            match self.parent(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    /// Lowest common ancestor.
    pub fn lca(&self, a: NodeId, b: NodeId) -> NodeId {
        let (mut a, mut b) = (a, b);
        while self.depth[a.0] > self.depth[b.0] {
            a = self.parent(a).expect("non-root has parent");
        }
        while self.depth[b.0] > self.depth[a.0] {
            b = self.parent(b).expect("non-root has parent");
        }
        while a != b {
            a = self.parent(a).expect("non-root has parent");
            b = self.parent(b).expect("non-root has parent");
        }
        a
    }

    /// Descendant set of `v`, including `v`, in ascending order.
    pub fn descendants(&self, v: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            out.push(u);
            stack.extend(self.children[u.0].iter().copied());
        }
        out.sort();
        out
    }

    /// Edges from `a` up to the root as `(child, parent)` pairs, nearest first.
    pub fn path_to_root(&self, a: NodeId) -> Result<Vec<(NodeId, NodeId)>> {
        self.check(a)?;
        let mut path = Vec::with_capacity(self.depth[a.0]);
        let mut cur = a;
        while let Some(p) = self.parent(cur) {
            path.push((cur, p));
            cur = p;
        }
        Ok(path)
    }

    /// Resistance and reactance summed over the path from `node` up to `ancestor`.
    pub fn path_impedance(&self, node: NodeId, ancestor: NodeId) -> Result<PathSummary> {
        self.check(node)?;
        self.check(ancestor)?;
        let (mut r_sum, mut x_sum) = (0.0, 0.0);
        let mut cur = node;
        while cur != ancestor {
            match (self.parent(cur), self.impedance_to_parent(cur)) {
                (Some(p), Some(z)) if self.depth[cur.0] > self.depth[ancestor.0] => {
                    r_sum += z.r;
                    x_sum += z.x;
                    cur = p;
                }
                _ => return Err(Error::NotAnAncestor { node, ancestor }),
            }
        }
        Ok(PathSummary {
            ancestor,
            node,
            r_sum,
            x_sum,
        })
    }
}

fn structural_violations(graph: &CandidateGraph, edges: &[EdgeKey]) -> Vec<TreeViolation> {
    let n = graph.node_count();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut usable = Vec::new();
    for &(u, v) in edges {
        if !graph.contains(u) || !graph.contains(v) || !graph.has_edge(u, v) {
            out.push(TreeViolation::EdgeNotInGraph(u, v));
            continue;
        }
        if !seen.insert(edge_key(u, v)) {
            out.push(TreeViolation::NotSpanningTree(format!(
                "edge ({u},{v}) listed twice"
            )));
            continue;
        }
        usable.push((u, v));
    }
    if edges.len() + 1 != n {
        out.push(TreeViolation::NotSpanningTree(format!(
            "{} edges for {} nodes",
            edges.len(),
            n
        )));
    }
    let mut uf = UnionFind::new(n);
    for &(u, v) in &usable {
        if !uf.union(u.0, v.0) {
            out.push(TreeViolation::NotSpanningTree(format!(
                "edge ({u},{v}) closes a cycle"
            )));
        }
    }
    if n > 0 {
        let unreached: Vec<NodeId> = (0..n)
            .filter(|&v| uf.find(v) != uf.find(0))
            .map(NodeId)
            .collect();
        if !unreached.is_empty() {
            out.push(TreeViolation::NotSpanningTree(format!(
                "{} nodes not connected to the root",
                unreached.len()
            )));
        }
    }
    out
}

/// Checks an operational edge set against every structural and identifiability
/// rule, reporting all violations at once.
///
/// `observed` is the set of metered nodes; it must coincide with the terminal
/// nodes of the tree. The root is always node 0.
pub fn validate_tree(
    graph: &CandidateGraph,
    edges: &[EdgeKey],
    observed: &BTreeSet<NodeId>,
) -> Result<RadialTree> {
    let mut violations = structural_violations(graph, edges);
    let n = graph.node_count();
    let mut degree = vec![0usize; n];
    for &(u, v) in edges {
        if u.0 < n && v.0 < n {
            degree[u.0] += 1;
            degree[v.0] += 1;
        }
    }
    if n > 0 && degree[0] != 1 {
        violations.push(TreeViolation::RootDegreeViolation(degree[0]));
    }
    let deg_two: Vec<NodeId> = (1..n)
        .filter(|&v| degree[v] == 2 && !observed.contains(&NodeId(v)))
        .map(NodeId)
        .collect();
    if !deg_two.is_empty() {
        violations.push(TreeViolation::DegreeTwoMissingNode(deg_two));
    }
    let unobserved: Vec<NodeId> = (1..n)
        .filter(|&v| degree[v] == 1 && !observed.contains(&NodeId(v)))
        .map(NodeId)
        .collect();
    if !unobserved.is_empty() {
        violations.push(TreeViolation::UnobservedLeaf(unobserved));
    }
    let internal: Vec<NodeId> = observed
        .iter()
        .copied()
        .filter(|v| v.is_root() || v.0 >= n || degree[v.0] != 1)
        .collect();
    if !internal.is_empty() {
        violations.push(TreeViolation::ObservedInternalNode(internal));
    }
    if violations.is_empty() {
        Ok(RadialTree::build(graph, edges))
    } else {
        Err(Error::InvalidTree(violations))
    }
}

/// Post-order traversal of a forest given as a parent map.
///
/// Keys are the forest's nodes; a parent that is `None` or not itself a key
/// makes the node a forest root. Siblings and roots are visited in ascending
/// id order, so each node is listed after all of its descendants.
pub fn post_order(parent: &BTreeMap<NodeId, Option<NodeId>>) -> Result<Vec<NodeId>> {
    let mut children: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    let mut roots = Vec::new();
    for (&v, &p) in parent {
        match p.filter(|p| parent.contains_key(p)) {
            Some(p) => children.entry(p).or_default().push(v),
            None => roots.push(v),
        }
    }
    let mut order = Vec::with_capacity(parent.len());
    // (node, next child index)
    let mut stack: Vec<(NodeId, usize)> = Vec::new();
    for r in roots {
        stack.push((r, 0));
        while let Some(top) = stack.last_mut() {
            let (v, i) = *top;
            match children.get(&v).and_then(|c| c.get(i)) {
                Some(&c) => {
                    top.1 += 1;
                    stack.push((c, 0));
                }
                None => {
                    order.push(v);
                    stack.pop();
                }
            }
        }
    }
    if order.len() != parent.len() {
        let visited: BTreeSet<NodeId> = order.iter().copied().collect();
        let culprit = parent
            .keys()
            .copied()
            .find(|v| !visited.contains(v))
            .expect("some node unvisited");
        return Err(Error::CycleDetected(culprit));
    }
    Ok(order)
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already connected.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(r: f64, x: f64) -> LineImpedance {
        LineImpedance::new(r, x).unwrap()
    }

    fn graph_with(n: usize, edges: &[(usize, usize, f64, f64)]) -> CandidateGraph {
        let mut g = CandidateGraph::new(n);
        for &(u, v, r, x) in edges {
            g.add_edge(NodeId(u), NodeId(v), z(r, x)).unwrap();
        }
        g
    }

    fn keys(edges: &[(usize, usize)]) -> Vec<EdgeKey> {
        edges.iter().map(|&(u, v)| (NodeId(u), NodeId(v))).collect()
    }

    fn ids(v: &[usize]) -> BTreeSet<NodeId> {
        v.iter().copied().map(NodeId).collect()
    }

    #[test]
    fn impedance_must_be_positive() {
        assert!(LineImpedance::new(0.0, 0.1).is_err());
        assert!(LineImpedance::new(0.1, -1.0).is_err());
        let l = z(0.03, 0.04);
        assert!((l.g() - 0.03 / 0.0025).abs() < 1e-12);
        assert!((l.beta() - 0.04 / 0.0025).abs() < 1e-12);
    }

    #[test]
    fn graph_rejects_loops_and_parallel_edges() {
        let mut g = CandidateGraph::new(3);
        assert!(matches!(
            g.add_edge(NodeId(1), NodeId(1), z(0.1, 0.1)),
            Err(Error::SelfLoop(_))
        ));
        g.add_edge(NodeId(1), NodeId(2), z(0.1, 0.1)).unwrap();
        assert!(matches!(
            g.add_edge(NodeId(2), NodeId(1), z(0.2, 0.2)),
            Err(Error::DuplicateEdge(..))
        ));
        assert!(matches!(
            g.add_edge(NodeId(1), NodeId(7), z(0.2, 0.2)),
            Err(Error::UnknownNode(_))
        ));
    }

    #[test]
    fn star_is_valid() {
        // root - k, k - {a, b}
        let g = graph_with(4, &[(0, 1, 0.1, 0.1), (1, 2, 0.1, 0.1), (1, 3, 0.1, 0.1)]);
        let t = validate_tree(&g, &keys(&[(0, 1), (1, 2), (1, 3)]), &ids(&[2, 3])).unwrap();
        assert_eq!(t.leaves(), &ids(&[2, 3]));
        assert_eq!(t.missing(), &ids(&[1]));
        assert_eq!(t.parent(NodeId(2)), Some(NodeId(1)));
    }

    #[test]
    fn degree_two_chain_is_rejected() {
        // a=1, b=2, c=3, d=4; root - d, d - {c, e=5, f=6}, c - b, b - a
        let edges = [(0, 4), (4, 3), (4, 5), (4, 6), (3, 2), (2, 1)];
        let g = graph_with(
            7,
            &edges.map(|(u, v)| (u, v, 0.05, 0.05)),
        );
        let err = validate_tree(&g, &keys(&edges), &ids(&[1, 5, 6])).unwrap_err();
        match err {
            Error::InvalidTree(v) => {
                assert_eq!(
                    v,
                    vec![TreeViolation::DegreeTwoMissingNode(vec![NodeId(2), NodeId(3)])]
                );
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn all_violations_reported() {
        // root has two children; node 3 is an unobserved leaf; node 1 observed but internal
        let edges = [(0, 1), (0, 2), (1, 3), (1, 4)];
        let g = graph_with(5, &edges.map(|(u, v)| (u, v, 0.05, 0.05)));
        let err = validate_tree(&g, &keys(&edges), &ids(&[1, 2, 4])).unwrap_err();
        let Error::InvalidTree(v) = err else { panic!() };
        let cats: Vec<_> = v.iter().map(|v| v.category()).collect();
        assert_eq!(
            cats,
            vec!["RootDegreeViolation", "UnobservedLeaf", "ObservedInternalNode"]
        );
    }

    #[test]
    fn non_spanning_and_foreign_edges() {
        let g = graph_with(4, &[(0, 1, 0.1, 0.1), (1, 2, 0.1, 0.1), (2, 1 + 2, 0.1, 0.1)]);
        let err = RadialTree::from_edges(&g, &keys(&[(0, 1), (1, 3)])).unwrap_err();
        let Error::InvalidTree(v) = err else { panic!() };
        assert!(v.contains(&TreeViolation::EdgeNotInGraph(NodeId(1), NodeId(3))));
        assert!(v.iter().any(|v| v.category() == "NotSpanningTree"));
    }

    #[test]
    fn binary_tree_depth_three() {
        // top node 1 under the root, complete binary tree of 15 nodes.
        let mut edges = vec![(0, 1)];
        for v in 2..=15 {
            edges.push((v / 2, v));
        }
        let g = graph_with(16, &edges.iter().map(|&(u, v)| (u, v, 0.05, 0.02)).collect::<Vec<_>>());
        let leaves: Vec<usize> = (8..=15).collect();
        let t = validate_tree(&g, &keys(&edges), &ids(&leaves)).unwrap();
        let frac = t.missing().len() as f64 / (t.node_count() - 1) as f64;
        assert_eq!(frac, 7.0 / 15.0);
    }

    #[test]
    fn paths_and_impedances() {
        // root(0) - e(1) - b(2) - a(3); b - d(4); e - f(5)
        let g = graph_with(
            6,
            &[
                (0, 1, 0.01, 0.02),
                (1, 2, 0.03, 0.04),
                (2, 3, 0.05, 0.06),
                (2, 4, 0.07, 0.08),
                (1, 5, 0.09, 0.1),
            ],
        );
        let t = RadialTree::from_edges(&g, &keys(&[(0, 1), (1, 2), (2, 3), (2, 4), (1, 5)])).unwrap();
        assert!(t.path_to_root(NodeId(0)).unwrap().is_empty());
        let p = t.path_to_root(NodeId(3)).unwrap();
        assert_eq!(
            p,
            vec![(NodeId(3), NodeId(2)), (NodeId(2), NodeId(1)), (NodeId(1), NodeId(0))]
        );
        let s = t.path_impedance(NodeId(3), NodeId(1)).unwrap();
        assert!((s.r_sum - 0.08).abs() < 1e-15 && (s.x_sum - 0.10).abs() < 1e-15);
        let s = t.path_impedance(NodeId(4), NodeId(4)).unwrap();
        assert_eq!((s.r_sum, s.x_sum), (0.0, 0.0));
        assert!(matches!(
            t.path_impedance(NodeId(3), NodeId(5)),
            Err(Error::NotAnAncestor { .. })
        ));
        assert!(matches!(t.path_to_root(NodeId(9)), Err(Error::UnknownNode(_))));
        assert_eq!(t.lca(NodeId(3), NodeId(4)), NodeId(2));
        assert_eq!(t.lca(NodeId(3), NodeId(5)), NodeId(1));
        assert_eq!(t.descendants(NodeId(2)), vec![NodeId(2), NodeId(3), NodeId(4)]);
    }

    #[test]
    fn post_order_basics() {
        let single = BTreeMap::from([(NodeId(4), None)]);
        assert_eq!(post_order(&single).unwrap(), vec![NodeId(4)]);
        // chain k(1) -> k2(2) -> k3(3), parent of 3 is outside the map
        let chain = BTreeMap::from([
            (NodeId(1), Some(NodeId(2))),
            (NodeId(2), Some(NodeId(3))),
            (NodeId(3), Some(NodeId(0))),
        ]);
        assert_eq!(
            post_order(&chain).unwrap(),
            vec![NodeId(1), NodeId(2), NodeId(3)]
        );
        let cyc = BTreeMap::from([
            (NodeId(1), Some(NodeId(2))),
            (NodeId(2), Some(NodeId(1))),
            (NodeId(5), None),
        ]);
        assert!(matches!(post_order(&cyc), Err(Error::CycleDetected(NodeId(1)))));
    }

    #[test]
    fn post_order_sibling_order() {
        // 9 has children 7 and 3; 3 has child 8.
        let m = BTreeMap::from([
            (NodeId(9), None),
            (NodeId(7), Some(NodeId(9))),
            (NodeId(3), Some(NodeId(9))),
            (NodeId(8), Some(NodeId(3))),
        ]);
        assert_eq!(
            post_order(&m).unwrap(),
            vec![NodeId(8), NodeId(3), NodeId(7), NodeId(9)]
        );
    }
}
