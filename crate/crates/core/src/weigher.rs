//! Edge weights from entailment-classifier logits.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::backend::{Backend, BackendError};
use crate::predicate::{TypePair, TypedPredicate};
use crate::surface::{SurfaceError, SurfaceMapper};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WeigherError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEdge {
    pub src: TypedPredicate,
    pub dst: TypedPredicate,
    pub weight: f64,
}

/// Softmax over (E, N, C) logits, shifted by the maximum for stability.
pub fn softmax3(logits: [f64; 3]) -> [f64; 3] {
    let max = logits[0].max(logits[1]).max(logits[2]);
    let e = logits.map(|x| libm::exp(x - max));
    let sum = e[0] + e[1] + e[2];
    e.map(|x| x / sum)
}

/// Entailment-class probability, clamped into [0, 1].
pub fn entailment_weight(logits: [f64; 3]) -> f64 {
    softmax3(logits)[0].clamp(0.0, 1.0)
}

pub fn edge_weight(
    mapper: &SurfaceMapper,
    p: &TypedPredicate,
    q: &TypedPredicate,
    tp: &TypePair,
    backend: &dyn Backend,
) -> Result<f64, WeigherError> {
    let sp = mapper.render(p, tp)?.text;
    let sq = mapper.render(q, tp)?.text;
    Ok(entailment_weight(backend.score(&sp, &sq)?.logits))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFailure {
    pub src: TypedPredicate,
    pub dst: TypedPredicate,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoredEdges {
    /// Successfully weighted edges, in input order.
    pub edges: Vec<WeightedEdge>,
    /// Pairs that received no edge.
    pub failures: Vec<EdgeFailure>,
}

/// Weighs every pair with one batched backend call. Failed pairs are
/// reported and get no edge.
pub fn score_edges(
    mapper: &SurfaceMapper,
    pairs: &[(TypedPredicate, TypedPredicate)],
    tp: &TypePair,
    backend: &dyn Backend,
) -> ScoredEdges {
    let mut out = ScoredEdges::default();
    let mut queued = Vec::new();
    let mut sentences = Vec::new();
    for (p, q) in pairs {
        match (mapper.render(p, tp), mapper.render(q, tp)) {
            (Ok(sp), Ok(sq)) => {
                queued.push((p, q));
                sentences.push((sp.text, sq.text));
            }
            (Err(e), _) | (_, Err(e)) => {
                out.failures.push(EdgeFailure { src: p.clone(), dst: q.clone(), reason: e.to_string() })
            }
        }
    }
    let results = backend.score_batch(&sentences);
    for ((p, q), r) in queued.into_iter().zip(results) {
        match r {
            Ok(s) => {
                out.edges.push(WeightedEdge { src: p.clone(), dst: q.clone(), weight: entailment_weight(s.logits) })
            }
            Err(e) => out.failures.push(EdgeFailure { src: p.clone(), dst: q.clone(), reason: e.to_string() }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MockBackend;
    use crate::predicate::{parse_predicate, ArgType};
    use alloc::vec;

    #[test]
    fn softmax_examples() {
        assert!((entailment_weight([0.0, 0.0, 0.0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!((entailment_weight([libm::log(2.0), 0.0, 0.0]) - 0.5).abs() < 1e-15);
        assert!((entailment_weight([30.0, -30.0, -30.0]) - 1.0).abs() < 1e-12);
        assert_eq!(entailment_weight([1e308, -1e308, 0.0]), 1.0);
    }

    #[test]
    fn scores_in_order_and_records_failures() {
        let m = SurfaceMapper::bundled();
        let tp = TypePair::new(ArgType::new("person").unwrap(), ArgType::new("government").unwrap());
        let a = parse_predicate("(adore.1,adore.2,person,government)").unwrap();
        let b = parse_predicate("(know.1,know.2,person,government)").unwrap();
        let bad = parse_predicate("(know.3,know.2,person,government)").unwrap();
        let backend = MockBackend::new(7, 16);
        let pairs = vec![(a.clone(), b.clone()), (a.clone(), bad.clone()), (b.clone(), a.clone())];
        let out = score_edges(&m, &pairs, &tp, &backend);
        assert_eq!(out.edges.len(), 2);
        assert_eq!((out.edges[0].src.clone(), out.edges[1].src.clone()), (a.clone(), b.clone()));
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.failures[0].dst, bad);
        let single = edge_weight(&m, &a, &b, &tp, &backend).unwrap();
        assert_eq!(out.edges[0].weight, single);
        assert!(score_edges(&m, &[], &tp, &backend).edges.is_empty());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalized(e in -50.0..50.0f64, n in -50.0..50.0f64, c in -50.0..50.0f64) {
                let s = softmax3([e, n, c]);
                prop_assert!((s[0] + s[1] + s[2] - 1.0).abs() < 1e-12);
                let w = entailment_weight([e, n, c]);
                prop_assert!((0.0..=1.0).contains(&w));
                prop_assert_eq!(w, s[0]);
            }

            #[test]
            fn monotone_in_entailment(e in -20.0..20.0f64, delta in 1e-3..5.0f64, n in -20.0..20.0f64, c in -20.0..20.0f64) {
                let (lo, hi) = (entailment_weight([e, n, c]), entailment_weight([e + delta, n, c]));
                prop_assert!(hi >= lo);
                // near 1 the increment falls below the spacing of f64
                if hi < 1.0 - 1e-12 {
                    prop_assert!(hi > lo);
                }
            }
        }
    }
}
