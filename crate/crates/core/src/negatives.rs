//! Session-aware negative edges with in-batch false-negative filtering.

use std::collections::HashSet;

use rand::Rng;

use crate::session::{InteractionEvent, NodeId, EMPTY_NODE};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NegativeEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub t: f64,
    /// Index into the batch of the positive this negative pairs with.
    pub positive: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NegativeSample {
    pub negatives: Vec<NegativeEdge>,
    /// Positives whose candidate set was empty.
    pub skipped: usize,
}

fn key(src: NodeId, dst: NodeId, t: f64) -> (NodeId, NodeId, u64) {
    (src, dst, t.to_bits())
}

/// Candidate destinations for a positive `(src, ·, t)`: the empty node and
/// every session subject except `src` and any `d` with `(src, d, t)` in the
/// batch. Ascending node id.
pub fn candidates(
    src: NodeId,
    t: f64,
    subjects: &[NodeId],
    observed: &HashSet<(NodeId, NodeId, u64)>,
) -> Vec<NodeId> {
    let mut c: Vec<NodeId> = std::iter::once(EMPTY_NODE)
        .chain(subjects.iter().copied())
        .filter(|&d| d != src && !observed.contains(&key(src, d, t)))
        .collect();
    c.sort_unstable();
    c.dedup();
    c
}

/// One negative per positive (non-empty `dst`) event of `batch`, drawn
/// uniformly from its candidate set.
pub fn sample_negatives<R: Rng + ?Sized>(
    batch: &[InteractionEvent],
    subjects: &[NodeId],
    rng: &mut R,
) -> NegativeSample {
    let observed: HashSet<_> = batch.iter().map(|e| key(e.src, e.dst, e.t)).collect();
    let mut out = NegativeSample::default();
    for (i, e) in batch.iter().enumerate() {
        if e.dst == EMPTY_NODE {
            continue;
        }
        let c = candidates(e.src, e.t, subjects, &observed);
        if c.is_empty() {
            out.skipped += 1;
            continue;
        }
        out.negatives.push(NegativeEdge {
            src: e.src,
            dst: c[rng.gen_range(0..c.len())],
            t: e.t,
            positive: i,
        });
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NegativeAudit {
    /// Negatives equal to an observed `(src, dst, t)` of the batch.
    pub collisions: usize,
    /// Negatives whose destination is neither a subject nor the empty node.
    pub out_of_session: usize,
    pub self_loops: usize,
}

pub fn audit_negatives(
    negatives: &[NegativeEdge],
    batch: &[InteractionEvent],
    subjects: &[NodeId],
) -> NegativeAudit {
    let observed: HashSet<_> = batch.iter().map(|e| key(e.src, e.dst, e.t)).collect();
    let mut audit = NegativeAudit::default();
    for n in negatives {
        if observed.contains(&key(n.src, n.dst, n.t)) {
            audit.collisions += 1;
        }
        if n.dst != EMPTY_NODE && !subjects.contains(&n.dst) {
            audit.out_of_session += 1;
        }
        if n.src == n.dst {
            audit.self_loops += 1;
        }
    }
    audit
}
