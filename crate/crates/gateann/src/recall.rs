//! Recall@K against an exact filtered ground truth.

use crate::dataset::NodeId;

/// Fraction of `truth` recovered within the first `k` results.
///
/// The denominator is `|truth|` (capped at 1 from below), so queries whose
/// predicate matches fewer than `k` nodes are scored against the true match
/// count rather than `k`.
pub fn recall_at_k(result: &[NodeId], truth: &[NodeId], k: usize) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let head = &result[..result.len().min(k)];
    let hits = head.iter().filter(|id| truth.contains(id)).count();
    hits as f64 / truth.len() as f64
}
