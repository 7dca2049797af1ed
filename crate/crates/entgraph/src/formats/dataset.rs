//! Labeled predicate-pair datasets: `premise<TAB>hypothesis<TAB>True|False`
//! with an optional fourth `valid|test` column.

use std::path::Path;

use entgraph_core::{parse_predicate, type_pair_of, LabeledPair, Split};
use serde::Serialize;

use crate::error::{read_text, Error, FormatError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct DatasetCounts {
    pub total: usize,
    pub positives: usize,
    pub valid: usize,
    pub test: usize,
    pub unsplit: usize,
}

impl DatasetCounts {
    pub fn of(pairs: &[LabeledPair]) -> Self {
        let mut c = DatasetCounts { total: pairs.len(), ..DatasetCounts::default() };
        for p in pairs {
            c.positives += usize::from(p.label);
            match p.split {
                Some(Split::Valid) => c.valid += 1,
                Some(Split::Test) => c.test += 1,
                None => c.unsplit += 1,
            }
        }
        c
    }
}

pub fn parse_dataset(text: &str) -> Result<Vec<LabeledPair>, FormatError> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let (premise, hypothesis, label, split) = match fields[..] {
            [p, h, l] => (p, h, l, None),
            [p, h, l, s] => (p, h, l, Some(s)),
            _ => {
                return Err(FormatError::line(
                    n,
                    format!("expected 3 or 4 tab-separated fields, found {}", fields.len()),
                ))
            }
        };
        let pred = |s: &str| parse_predicate(s).map_err(|e| FormatError::line(n, e.to_string()));
        let (premise, hypothesis) = (pred(premise)?, pred(hypothesis)?);
        if type_pair_of(&premise) != type_pair_of(&hypothesis) {
            return Err(FormatError::line(n, "premise and hypothesis have different type pairs"));
        }
        let label = match label {
            "True" => true,
            "False" => false,
            other => return Err(FormatError::line(n, format!("label `{other}` is neither True nor False"))),
        };
        let split = match split {
            None => None,
            Some(s) => Some(
                Split::parse(s)
                    .ok_or_else(|| FormatError::line(n, format!("split `{s}` is neither valid nor test")))?,
            ),
        };
        pairs.push(LabeledPair { premise, hypothesis, label, split });
    }
    Ok(pairs)
}

pub fn load_dataset(path: &Path) -> Result<Vec<LabeledPair>> {
    parse_dataset(&read_text(path)?).map_err(|e| Error::format(path, e))
}
