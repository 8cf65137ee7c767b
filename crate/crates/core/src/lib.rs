//! Radial distribution grid topology learning from voltage statistics at
//! terminal nodes.
//!
//! The crate is organised bottom-up:
//! - [`grid`]: node ids, candidate graphs, radial trees and their validation;
//! - [`powerflow`]: the linear coupled power-flow model, analytic voltage
//!   moments and seeded voltage sampling;
//! - [`moments`]: the pairwise difference-variance statistic (phi) and the
//!   closed forms the learner tests against;
//! - [`learner`]: the three-stage reconstruction;
//! - [`oracle`]: brute-force cross-checks;
//! - [`harness`]: file formats, random instances and experiments.

pub mod error;
pub mod grid;
pub mod harness;
pub mod learner;
pub mod moments;
pub mod oracle;
pub mod powerflow;

pub use error::{Error, Result, TreeViolation};
pub use grid::{validate_tree, CandidateGraph, LineImpedance, NodeId, RadialTree};
pub use learner::{learn_topology, LearnedTopology, LearnerConfig, MatchRule, Problem, TopologyStatus};
pub use moments::{analytic_phi, empirical_phi, PhiMatrix};
pub use powerflow::{InjectionDistribution, InjectionStats, NodeStats};
