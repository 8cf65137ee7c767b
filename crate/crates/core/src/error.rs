//! Error types shared across the crate.

use std::fmt;

use thiserror::Error;

use crate::grid::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

/// A single rule broken by a proposed operational tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeViolation {
    /// Edge count, connectivity or acyclicity is wrong.
    NotSpanningTree(String),
    /// An operational edge is not among the candidate lines.
    EdgeNotInGraph(NodeId, NodeId),
    /// Unobserved nodes of degree two make the topology non-identifiable:
    /// their order along a path cannot be told apart from leaf data.
    DegreeTwoMissingNode(Vec<NodeId>),
    /// The substation must feed exactly one node.
    RootDegreeViolation(usize),
    /// Terminal nodes that are not in the observed set.
    UnobservedLeaf(Vec<NodeId>),
    /// Observed nodes that are not terminal nodes of the tree.
    ObservedInternalNode(Vec<NodeId>),
}

impl TreeViolation {
    /// Stable machine-readable category name.
    pub fn category(&self) -> &'static str {
        match self {
            TreeViolation::NotSpanningTree(_) => "NotSpanningTree",
            TreeViolation::EdgeNotInGraph(..) => "EdgeNotInGraph",
            TreeViolation::DegreeTwoMissingNode(_) => "DegreeTwoMissingNode",
            TreeViolation::RootDegreeViolation(_) => "RootDegreeViolation",
            TreeViolation::UnobservedLeaf(_) => "UnobservedLeaf",
            TreeViolation::ObservedInternalNode(_) => "ObservedInternalNode",
        }
    }
}

fn join(nodes: &[NodeId]) -> String {
    nodes
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeViolation::NotSpanningTree(why) => write!(f, "NotSpanningTree: {why}"),
            TreeViolation::EdgeNotInGraph(u, v) => {
                write!(f, "EdgeNotInGraph: ({u},{v}) is not a candidate line")
            }
            TreeViolation::DegreeTwoMissingNode(nodes) => write!(
                f,
                "DegreeTwoMissingNode: unobserved nodes {{{}}} have degree 2; \
                 their ordering is not unique given terminal data",
                join(nodes)
            ),
            TreeViolation::RootDegreeViolation(d) => {
                write!(f, "RootDegreeViolation: root has degree {d}, expected 1")
            }
            TreeViolation::UnobservedLeaf(nodes) => {
                write!(f, "UnobservedLeaf: terminal nodes {{{}}} are not observed", join(nodes))
            }
            TreeViolation::ObservedInternalNode(nodes) => write!(
                f,
                "ObservedInternalNode: observed nodes {{{}}} are not terminal",
                join(nodes)
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tree: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidTree(Vec<TreeViolation>),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate candidate edge ({0},{1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("impedance must be strictly positive (r={r}, x={x})")]
    NonPositiveImpedance { r: f64, x: f64 },
    #[error("node {ancestor} is not an ancestor of {node}")]
    NotAnAncestor { node: NodeId, ancestor: NodeId },
    #[error("cycle detected through node {0}")]
    CycleDetected(NodeId),
    #[error("the root node has no row in reduced matrices")]
    RootNotAllowed,
    #[error("reduced Laplacian is not positive definite")]
    SingularMatrix,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("injection statistics at node {0} are not positive semidefinite")]
    NonPsdStats(NodeId),
    #[error("at least {needed} samples required, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("path summaries do not share the ancestor ({0} vs {1})")]
    AncestorMismatch(NodeId, NodeId),
    #[error("instance too large for exhaustive search: {nodes} nodes (max {max})")]
    TooLarge { nodes: usize, max: usize },
    #[error("no spanning tree of the candidate graph satisfies the constraints")]
    NoFeasibleTree,
    #[error("infeasible instance shape: {0}")]
    InfeasibleShape(String),
    #[error("learned and true topologies use different node sets ({learned} vs {truth})")]
    NodeUniverseMismatch { learned: usize, truth: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable category, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidTree(v) => v.first().map_or("InvalidTree", |v| v.category()),
            Error::UnknownNode(_) => "UnknownNode",
            Error::SelfLoop(_) => "SelfLoop",
            Error::DuplicateEdge(..) => "DuplicateEdge",
            Error::NonPositiveImpedance { .. } => "NonPositiveImpedance",
            Error::NotAnAncestor { .. } => "NotAnAncestor",
            Error::CycleDetected(_) => "CycleDetected",
            Error::RootNotAllowed => "RootNotAllowed",
            Error::SingularMatrix => "SingularMatrix",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonPsdStats(_) => "NonPSDStats",
            Error::TooFewSamples { .. } => "TooFewSamples",
            Error::AncestorMismatch(..) => "AncestorMismatch",
            Error::TooLarge { .. } => "TooLarge",
            Error::NoFeasibleTree => "NoFeasibleTree",
            Error::InfeasibleShape(_) => "InfeasibleShape",
            Error::NodeUniverseMismatch { .. } => "NodeUniverseMismatch",
            Error::Parse { .. } => "ParseError",
            Error::Config(_) => "ConfigError",
            Error::Io(_) => "IoError",
            Error::Csv(_) => "IoError",
        }
    }
}
