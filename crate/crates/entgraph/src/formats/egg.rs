//! The `.egg` graph format and the bare edge stream.
//!
//! Lines hold tab-separated fields:
//!
//! ```text
//! #EGG <tab> 1
//! T <tab> first type <tab> second type
//! P <tab> canonical predicate
//! E <tab> src <tab> dst <tab> weight
//! ```
//!
//! Sections appear in that order, each sorted, so equal graphs serialize to
//! equal bytes. Weights are written as the shortest decimal that reads back
//! to the same `f64`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use entgraph_core::{build_graph, parse_predicate, ArgType, EntailmentGraph, TypePair, TypedPredicate, WeightedEdge};

use crate::error::{read_text, write_file, Error, FormatError, Result};

pub const EGG_HEADER: &str = "#EGG\t1";

fn edge_line(out: &mut String, src: &TypedPredicate, dst: &TypedPredicate, weight: f64) {
    let _ = writeln!(out, "E\t{src}\t{dst}\t{weight:?}");
}

pub fn to_egg_string(graph: &EntailmentGraph) -> String {
    let tp = graph.type_pair();
    let mut out = String::new();
    let _ = writeln!(out, "{EGG_HEADER}");
    let _ = writeln!(out, "T\t{}\t{}", tp.first(), tp.second());
    for p in graph.predicates() {
        let _ = writeln!(out, "P\t{p}");
    }
    for (src, dst, w) in graph.edges() {
        edge_line(&mut out, src, dst, w);
    }
    out
}

fn predicate_field(field: &str, line: usize) -> Result<TypedPredicate, FormatError> {
    parse_predicate(field).map_err(|e| FormatError::line(line, e.to_string()))
}

fn weight_field(field: &str, line: usize) -> Result<f64, FormatError> {
    let w: f64 = field.parse().map_err(|_| FormatError::line(line, format!("weight `{field}` is not a number")))?;
    if !(0.0..=1.0).contains(&w) {
        return Err(FormatError::line(line, format!("weight {w} outside [0, 1]")));
    }
    Ok(w)
}

fn parse_edge(fields: &[&str], line: usize) -> Result<WeightedEdge, FormatError> {
    match fields {
        ["E", src, dst, w] => Ok(WeightedEdge {
            src: predicate_field(src, line)?,
            dst: predicate_field(dst, line)?,
            weight: weight_field(w, line)?,
        }),
        _ => Err(FormatError::line(line, "expected `E<TAB>src<TAB>dst<TAB>weight`")),
    }
}

pub fn parse_egg(text: &str) -> Result<EntailmentGraph, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, EGG_HEADER)) => {}
        _ => return Err(FormatError::line(1, format!("missing `{}` header", EGG_HEADER.replace('\t', "<TAB>")))),
    }
    let mut tp: Option<TypePair> = None;
    let mut predicates = Vec::new();
    let mut edges = Vec::new();
    let mut last_line = 1;
    for (n, line) in lines {
        last_line = n;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[0] {
            "T" => {
                if tp.is_some() {
                    return Err(FormatError::line(n, "duplicate type line"));
                }
                let [_, a, b] = fields[..] else {
                    return Err(FormatError::line(n, "expected `T<TAB>type<TAB>type`"));
                };
                let ty = |s: &str| ArgType::new(s).map_err(|e| FormatError::line(n, e.to_string()));
                tp = Some(TypePair::new(ty(a)?, ty(b)?));
            }
            "P" if tp.is_none() => return Err(FormatError::line(n, "predicate before type line")),
            "P" => match fields[..] {
                [_, p] => predicates.push((n, predicate_field(p, n)?)),
                _ => return Err(FormatError::line(n, "expected `P<TAB>predicate`")),
            },
            "E" if tp.is_none() => return Err(FormatError::line(n, "edge before type line")),
            "E" => edges.push((n, parse_edge(&fields, n)?)),
            other => return Err(FormatError::line(n, format!("unknown record kind `{other}`"))),
        }
    }
    let tp = tp.ok_or_else(|| FormatError::line(last_line, "missing type line"))?;
    let known: BTreeSet<&TypedPredicate> = predicates.iter().map(|(_, p)| p).collect();
    if let Some((n, p)) = predicates.iter().find(|(_, p)| !tp.houses(p)) {
        return Err(FormatError::line(*n, format!("predicate {p} does not belong to {tp}")));
    }
    for (n, e) in &edges {
        if let Some(end) = [&e.src, &e.dst].into_iter().find(|end| !known.contains(end)) {
            return Err(FormatError::line(*n, format!("edge endpoint {end} has no P line")));
        }
        if e.src == e.dst {
            return Err(FormatError::line(*n, "self loop"));
        }
    }
    build_graph(&tp, predicates.into_iter().map(|(_, p)| p), edges.into_iter().map(|(_, e)| e))
        .map_err(|e| FormatError::line(last_line, e.to_string()))
}

pub fn read_egg(path: &Path) -> Result<EntailmentGraph> {
    parse_egg(&read_text(path)?).map_err(|e| Error::format(path, e))
}

pub fn write_egg(path: &Path, graph: &EntailmentGraph) -> Result<()> {
    write_file(path, to_egg_string(graph))
}

/// File name for a graph inside a graph directory.
pub fn egg_file_name(tp: &TypePair) -> String {
    let tp = tp.canonical();
    format!("{}__{}.egg", tp.first(), tp.second())
}

pub fn edges_to_string<'a>(edges: impl IntoIterator<Item = &'a WeightedEdge>) -> String {
    let mut out = String::new();
    for e in edges {
        edge_line(&mut out, &e.src, &e.dst, e.weight);
    }
    out
}

/// Parses an edge stream: `E` lines only, blank lines and `#` comments
/// skipped, order kept.
pub fn parse_edges(text: &str) -> Result<Vec<WeightedEdge>, FormatError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| parse_edge(&l.split('\t').collect::<Vec<_>>(), i + 1))
        .collect()
}

pub fn read_edges(path: &Path) -> Result<Vec<WeightedEdge>> {
    parse_edges(&read_text(path)?).map_err(|e| Error::format(path, e))
}

pub fn write_edges(path: &Path, edges: &[WeightedEdge]) -> Result<()> {
    write_file(path, edges_to_string(edges))
}
