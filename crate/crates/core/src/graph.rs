//! Typed entailment graphs: construction, lookups, neighbor queries,
//! transitivity diagnostics and RTE input augmentation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::predicate::{type_pair_of, TypePair, TypedPredicate};
use crate::surface::{normalize_sentence, SurfaceMapper};
use crate::weigher::WeightedEdge;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("edge endpoint {0} is not a graph predicate")]
    EndpointMissing(String),
    #[error("edge {src} -> {dst} has weight {weight} outside [0, 1]")]
    WeightOutOfRange { src: String, dst: String, weight: f64 },
    #[error("self loop on {0}")]
    SelfLoop(String),
    #[error("predicate {predicate} does not belong to type pair {type_pair}")]
    TypeMismatch { predicate: String, type_pair: String },
    #[error("collection already holds a graph for {0}")]
    DuplicateTypePair(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Hypotheses of the query predicate.
    Out,
    /// Premises of the query predicate.
    In,
}

type Adjacency = BTreeMap<TypedPredicate, BTreeMap<TypedPredicate, f64>>;

/// One typed graph. Immutable after construction apart from the optional
/// sentence index used by relaxed lookups.
#[derive(Debug, Clone)]
pub struct EntailmentGraph {
    type_pair: TypePair,
    predicates: BTreeSet<TypedPredicate>,
    out: Adjacency,
    incoming: Adjacency,
    edge_count: usize,
    sentences: Option<BTreeMap<String, Vec<TypedPredicate>>>,
}

impl PartialEq for EntailmentGraph {
    fn eq(&self, other: &Self) -> bool {
        self.type_pair == other.type_pair && self.predicates == other.predicates && self.out == other.out
    }
}

/// Builds a graph over the canonical form of `tp`. Duplicate edges keep the
/// last weight.
pub fn build_graph(
    tp: &TypePair,
    predicates: impl IntoIterator<Item = TypedPredicate>,
    edges: impl IntoIterator<Item = WeightedEdge>,
) -> Result<EntailmentGraph, GraphError> {
    let tp = tp.canonical();
    let predicates: BTreeSet<TypedPredicate> = predicates.into_iter().collect();
    if let Some(p) = predicates.iter().find(|p| !tp.houses(p)) {
        return Err(GraphError::TypeMismatch { predicate: p.to_string(), type_pair: tp.to_string() });
    }
    let mut out: Adjacency = BTreeMap::new();
    let mut incoming: Adjacency = BTreeMap::new();
    let mut edge_count = 0;
    for e in edges {
        for end in [&e.src, &e.dst] {
            if !predicates.contains(end) {
                return Err(GraphError::EndpointMissing(end.to_string()));
            }
        }
        if e.src == e.dst {
            return Err(GraphError::SelfLoop(e.src.to_string()));
        }
        if !(0.0..=1.0).contains(&e.weight) {
            return Err(GraphError::WeightOutOfRange {
                src: e.src.to_string(),
                dst: e.dst.to_string(),
                weight: e.weight,
            });
        }
        let previous = out.entry(e.src.clone()).or_default().insert(e.dst.clone(), e.weight);
        incoming.entry(e.dst).or_default().insert(e.src, e.weight);
        match previous {
            Some(_) => log::warn!("duplicate edge replaced"),
            None => edge_count += 1,
        }
    }
    Ok(EntailmentGraph { type_pair: tp, predicates, out, incoming, edge_count, sentences: None })
}

impl EntailmentGraph {
    pub fn type_pair(&self) -> &TypePair {
        &self.type_pair
    }

    pub fn predicates(&self) -> &BTreeSet<TypedPredicate> {
        &self.predicates
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn contains(&self, p: &TypedPredicate) -> bool {
        self.predicates.contains(p)
    }

    /// Edges ordered by source, then destination.
    pub fn edges(&self) -> impl Iterator<Item = (&TypedPredicate, &TypedPredicate, f64)> {
        self.out.iter().flat_map(|(s, row)| row.iter().map(move |(d, w)| (s, d, *w)))
    }

    pub fn weight(&self, p: &TypedPredicate, q: &TypedPredicate) -> Option<f64> {
        self.out.get(p)?.get(q).copied()
    }

    /// Precomputes the rendered-sentence index for relaxed lookups.
    pub fn index_sentences(&mut self, mapper: &SurfaceMapper) {
        let mut index: BTreeMap<String, Vec<TypedPredicate>> = BTreeMap::new();
        for p in &self.predicates {
            if let Ok(s) = mapper.render(p, &self.type_pair) {
                index.entry(normalize_sentence(&s.text)).or_default().push(p.clone());
            }
        }
        self.sentences = Some(index);
    }

    fn same_sentence(&self, p: &TypedPredicate, mapper: &SurfaceMapper) -> Vec<TypedPredicate> {
        let Ok(s) = mapper.render(p, &self.type_pair) else {
            return Vec::new();
        };
        let key = normalize_sentence(&s.text);
        match &self.sentences {
            Some(index) => index.get(&key).cloned().unwrap_or_default(),
            None => self
                .predicates
                .iter()
                .filter(|c| mapper.render(c, &self.type_pair).is_ok_and(|cs| normalize_sentence(&cs.text) == key))
                .cloned()
                .collect(),
        }
    }

    /// Whether `p` or a predicate sharing its rendered sentence is a node.
    pub fn contains_relaxed(&self, p: &TypedPredicate, mapper: &SurfaceMapper) -> bool {
        self.contains(p) || (self.type_pair.houses(p) && !self.same_sentence(p, mapper).is_empty())
    }

    /// Exact match first; with a mapper, falls back to predicates whose
    /// rendered sentences coincide with the query's. When several relaxed
    /// candidate pairs carry edges the largest weight is returned.
    pub fn lookup(&self, p: &TypedPredicate, q: &TypedPredicate, relaxed: Option<&SurfaceMapper>) -> Option<f64> {
        if let Some(w) = self.weight(p, q) {
            return Some(w);
        }
        let mapper = relaxed?;
        if !(self.type_pair.houses(p) && self.type_pair.houses(q)) {
            return None;
        }
        let qs = self.same_sentence(q, mapper);
        if qs.is_empty() {
            return None;
        }
        self.same_sentence(p, mapper)
            .iter()
            .flat_map(|pc| qs.iter().filter_map(move |qc| self.weight(pc, qc)))
            .fold(None, |acc: Option<f64>, w| Some(acc.map_or(w, |a| a.max(w))))
    }

    /// Up to `k` neighbors by descending weight, canonical order on ties.
    pub fn neighbors(&self, p: &TypedPredicate, direction: Direction, k: usize) -> Vec<(TypedPredicate, f64)> {
        let adjacency = match direction {
            Direction::Out => &self.out,
            Direction::In => &self.incoming,
        };
        let Some(row) = adjacency.get(p) else {
            return Vec::new();
        };
        let mut list: Vec<(TypedPredicate, f64)> = row.iter().map(|(q, w)| (q.clone(), *w)).collect();
        list.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        list.truncate(k);
        list
    }

    /// Two-step paths a→b→c with both weights above `eps` where
    /// W(a,b)·W(b,c) exceeds W(a,c) (an absent edge counts as 0).
    pub fn soft_transitivity_violations(&self, eps: f64) -> Vec<(TypedPredicate, TypedPredicate, TypedPredicate)> {
        let mut found = Vec::new();
        for (a, row) in &self.out {
            for (b, &w_ab) in row.iter().filter(|(_, w)| **w > eps) {
                let Some(next) = self.out.get(b) else { continue };
                for (c, &w_bc) in next.iter().filter(|(_, w)| **w > eps) {
                    if c == a {
                        continue;
                    }
                    let w_ac = row.get(c).copied().unwrap_or(0.0);
                    if w_ab * w_bc > w_ac {
                        found.push((a.clone(), b.clone(), c.clone()));
                    }
                }
            }
        }
        found
    }
}

/// At most one graph per canonical type pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphCollection {
    graphs: BTreeMap<TypePair, EntailmentGraph>,
}

impl GraphCollection {
    pub fn new() -> Self {
        GraphCollection::default()
    }

    pub fn insert(&mut self, graph: EntailmentGraph) -> Result<(), GraphError> {
        let key = graph.type_pair.clone();
        if self.graphs.contains_key(&key) {
            return Err(GraphError::DuplicateTypePair(key.to_string()));
        }
        self.graphs.insert(key, graph);
        Ok(())
    }

    pub fn get(&self, tp: &TypePair) -> Option<&EntailmentGraph> {
        self.graphs.get(&tp.canonical())
    }

    /// The graph housing `p`.
    pub fn graph_for(&self, p: &TypedPredicate) -> Option<&EntailmentGraph> {
        self.graphs.get(&type_pair_of(p))
    }

    pub fn iter(&self) -> impl Iterator<Item = &EntailmentGraph> {
        self.graphs.values()
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn index_sentences(&mut self, mapper: &SurfaceMapper) {
        self.graphs.values_mut().for_each(|g| g.index_sentences(mapper));
    }
}

/// A predicate extracted from an RTE sentence, optionally with the surface
/// strings of its slot-1 and slot-2 arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateMention {
    pub predicate: TypedPredicate,
    pub arguments: Option<(String, String)>,
}

/// Sentence for neighbor `b` of the matched predicate `a`. Argument strings
/// follow the letters: whatever argument filled `a`'s slot under letter A
/// fills `b`'s letter-A slot.
fn replacement(
    mapper: &SurfaceMapper,
    graph: &EntailmentGraph,
    mention: &PredicateMention,
    b: &TypedPredicate,
) -> Option<String> {
    let tp = graph.type_pair();
    let rendered = mapper.render(b, tp).ok()?;
    let Some((arg1, arg2)) = &mention.arguments else {
        return Some(rendered.text);
    };
    let a = mapper.render(&mention.predicate, tp).ok()?;
    let (arg_a, arg_b) = if a.slot1_letter == crate::predicate::Letter::A { (arg1, arg2) } else { (arg2, arg1) };
    let placeholder = |l: crate::predicate::Letter| {
        let mut s = tp.type_of(l).title_case();
        s.push(' ');
        s.push_str(l.as_str());
        s
    };
    let (pa, pb) = (placeholder(crate::predicate::Letter::A), placeholder(crate::predicate::Letter::B));
    // swap through a marker so an argument string cannot be re-replaced
    let marked = rendered.text.replacen(&pa, "\u{0}A\u{0}", 1).replacen(&pb, "\u{0}B\u{0}", 1);
    Some(marked.replacen("\u{0}A\u{0}", arg_a, 1).replacen("\u{0}B\u{0}", arg_b, 1))
}

fn augment(
    sentence: &str,
    mentions: &[PredicateMention],
    collection: &GraphCollection,
    k_nbr: usize,
    direction: Direction,
    mapper: &SurfaceMapper,
) -> String {
    let mut parts = Vec::from([sentence.to_string()]);
    for m in mentions {
        let Some(graph) = collection.graph_for(&m.predicate) else { continue };
        for (b, _) in graph.neighbors(&m.predicate, direction, k_nbr) {
            if let Some(s) = replacement(mapper, graph, m, &b) {
                parts.push(s);
            }
        }
    }
    parts.join("; ")
}

/// Appends neighbor replacements: hypotheses (out-neighbors) of premise
/// predicates and premises (in-neighbors) of hypothesis predicates, at most
/// `k_nbr` each, joined with "; ".
pub fn augment_rte_input(
    premise: &str,
    hypothesis: &str,
    premise_predicates: &[PredicateMention],
    hypothesis_predicates: &[PredicateMention],
    collection: &GraphCollection,
    k_nbr: usize,
    mapper: &SurfaceMapper,
) -> (String, String) {
    (
        augment(premise, premise_predicates, collection, k_nbr, Direction::Out, mapper),
        augment(hypothesis, hypothesis_predicates, collection, k_nbr, Direction::In, mapper),
    )
}
