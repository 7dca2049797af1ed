//! Best-K ordered pair selection without materializing every score.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::Range;

use super::{selector_score, PredicateSphere};

/// A candidate edge between indices into the caller's predicate list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredEdge {
    pub src: usize,
    pub dst: usize,
    pub score: f64,
}

impl ScoredEdge {
    /// `Less` means `self` ranks ahead: higher score first, then lower
    /// (src, dst). With a canonically sorted predicate list the index order
    /// is the canonical string order.
    pub fn rank_cmp(&self, other: &ScoredEdge) -> Ordering {
        other.score.total_cmp(&self.score).then(self.src.cmp(&other.src)).then(self.dst.cmp(&other.dst))
    }
}

/// Heap entry ordered so the worst kept edge sits at the top.
struct Worst(ScoredEdge);

impl PartialEq for Worst {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Worst {}

impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.rank_cmp(&other.0)
    }
}

struct BestK {
    k: usize,
    heap: BinaryHeap<Worst>,
}

impl BestK {
    fn new(k: usize, expected: usize) -> Self {
        BestK { k, heap: BinaryHeap::with_capacity(k.min(expected) + 1) }
    }

    fn push(&mut self, e: ScoredEdge) {
        if self.k == 0 {
            return;
        }
        if self.heap.len() < self.k {
            self.heap.push(Worst(e));
        } else if let Some(top) = self.heap.peek() {
            if e.rank_cmp(&top.0) == Ordering::Less {
                self.heap.pop();
                self.heap.push(Worst(e));
            }
        }
    }

    fn into_sorted(self) -> Vec<ScoredEdge> {
        let mut out: Vec<ScoredEdge> = self.heap.into_iter().map(|w| w.0).collect();
        out.sort_by(|a, b| a.rank_cmp(b));
        out
    }
}

/// Best `k` edges whose source index lies in `sources`, over all
/// destinations other than the source itself.
pub fn select_shard(spheres: &[PredicateSphere], sources: Range<usize>, k: usize) -> Vec<ScoredEdge> {
    let n = spheres.len();
    let mut best = BestK::new(k, sources.len().saturating_mul(n.saturating_sub(1)));
    for src in sources {
        for dst in 0..n {
            if src != dst {
                let score = selector_score(&spheres[src], &spheres[dst]);
                best.push(ScoredEdge { src, dst, score });
            }
        }
    }
    best.into_sorted()
}

/// Merges per-shard results into the global best `k`.
pub fn merge_top(shards: Vec<Vec<ScoredEdge>>, k: usize) -> Vec<ScoredEdge> {
    let total = shards.iter().map(Vec::len).sum();
    let mut best = BestK::new(k, total);
    for e in shards.into_iter().flatten() {
        best.push(e);
    }
    best.into_sorted()
}

/// The `k` highest-scoring ordered pairs, best first; all pairs when
/// `k >= n(n-1)`.
pub fn select_top_edges(spheres: &[PredicateSphere], k: usize) -> Vec<ScoredEdge> {
    select_shard(spheres, 0..spheres.len(), k)
}
