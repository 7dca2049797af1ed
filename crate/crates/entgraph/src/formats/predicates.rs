//! Predicate list files: one canonical predicate per line, `#` comments.
//!
//! A `#types<TAB>t1<TAB>t2` line fixes the argument orientation (which type
//! is rendered as A) for the predicates of that type pair. Without one, the
//! first predicate of the pair decides.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use entgraph_core::{parse_predicate, ArgType, TypePair, TypedPredicate};

use crate::error::{read_text, write_file, Error, FormatError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PredicateGroup {
    /// Oriented type pair used for rendering.
    pub type_pair: TypePair,
    /// Sorted and deduplicated.
    pub predicates: Vec<TypedPredicate>,
}

/// Predicates grouped by canonical type pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredicateFile {
    groups: BTreeMap<TypePair, PredicateGroup>,
}

impl PredicateFile {
    pub fn from_groups(groups: impl IntoIterator<Item = PredicateGroup>) -> Self {
        let mut file = PredicateFile::default();
        for g in groups {
            let entry = file.group_mut(&g.type_pair, true);
            entry.predicates.extend(g.predicates);
        }
        file.normalize();
        file
    }

    fn group_mut(&mut self, oriented: &TypePair, directive: bool) -> &mut PredicateGroup {
        let entry = self
            .groups
            .entry(oriented.canonical())
            .or_insert_with(|| PredicateGroup { type_pair: oriented.clone(), predicates: Vec::new() });
        if directive {
            entry.type_pair = oriented.clone();
        }
        entry
    }

    fn normalize(&mut self) {
        for g in self.groups.values_mut() {
            g.predicates.sort();
            g.predicates.dedup();
        }
    }

    pub fn groups(&self) -> impl Iterator<Item = &PredicateGroup> {
        self.groups.values()
    }

    pub fn group(&self, tp: &TypePair) -> Option<&PredicateGroup> {
        self.groups.get(&tp.canonical())
    }

    pub fn predicates(&self) -> impl Iterator<Item = &TypedPredicate> {
        self.groups.values().flat_map(|g| g.predicates.iter())
    }

    pub fn len(&self) -> usize {
        self.groups.values().map(|g| g.predicates.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn parse_predicate_file(text: &str) -> Result<PredicateFile, FormatError> {
    let mut file = PredicateFile::default();
    let mut directed: Vec<TypePair> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix("#types") {
            let names: Vec<&str> = rest.split_whitespace().collect();
            let [a, b] = names[..] else {
                return Err(FormatError::line(n, "expected `#types<TAB>type<TAB>type`"));
            };
            let ty = |s: &str| ArgType::new(s).map_err(|e| FormatError::line(n, e.to_string()));
            let tp = TypePair::new(ty(a)?, ty(b)?);
            if directed.contains(&tp.canonical()) {
                return Err(FormatError::line(n, format!("second orientation for {}", tp.canonical())));
            }
            directed.push(tp.canonical());
            file.group_mut(&tp, true);
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let p = parse_predicate(line).map_err(|e| FormatError::line(n, e.to_string()))?;
        let oriented = TypePair::new(p.type1().clone(), p.type2().clone());
        file.group_mut(&oriented, false).predicates.push(p);
    }
    file.normalize();
    Ok(file)
}

pub fn predicate_file_to_string(file: &PredicateFile) -> String {
    let mut out = String::new();
    for g in file.groups() {
        let _ = writeln!(out, "#types\t{}\t{}", g.type_pair.first(), g.type_pair.second());
        for p in &g.predicates {
            let _ = writeln!(out, "{p}");
        }
    }
    out
}

pub fn read_predicate_file(path: &Path) -> Result<PredicateFile> {
    parse_predicate_file(&read_text(path)?).map_err(|e| Error::format(path, e))
}

pub fn write_predicate_file(path: &Path, file: &PredicateFile) -> Result<()> {
    write_file(path, predicate_file_to_string(file))
}
