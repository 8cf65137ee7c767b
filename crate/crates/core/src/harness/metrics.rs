use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::grid::{EdgeKey, RadialTree};
use crate::learner::LearnedTopology;

/// Size of the symmetric difference between learned and true edge sets over
/// the number of true edges, capped at 1.
///
/// A wrong parent costs two: the spurious edge and the missed one. Nodes the
/// learner never attached contribute their missed true edge.
pub fn fractional_error(learned: &LearnedTopology, truth: &RadialTree) -> Result<f64> {
    if learned.node_count != truth.node_count() {
        return Err(Error::NodeUniverseMismatch {
            learned: learned.node_count,
            truth: truth.node_count(),
        });
    }
    let t: BTreeSet<EdgeKey> = truth.edges().iter().copied().collect();
    let l: BTreeSet<EdgeKey> = learned.edges.keys().copied().collect();
    if t.is_empty() {
        return Ok(if l.is_empty() { 0.0 } else { 1.0 });
    }
    let diff = t.symmetric_difference(&l).count();
    Ok((diff as f64 / t.len() as f64).min(1.0))
}

pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
