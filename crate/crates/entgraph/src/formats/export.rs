//! Line-delimited JSON exports and CSV curves.

use std::fmt::Write as _;

use entgraph_core::{Curve, GeneratorRecord, WeigherRecord};
use serde::Serialize;

#[derive(Serialize)]
struct GeneratorLine<'a> {
    prompt: &'a str,
    fill: &'a str,
}

#[derive(Serialize)]
struct WeigherLine<'a> {
    premise: &'a str,
    hypothesis: &'a str,
    label: &'a str,
}

pub fn to_jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("plain records serialize"));
        out.push('\n');
    }
    out
}

pub fn generator_jsonl(records: &[GeneratorRecord]) -> String {
    to_jsonl(records.iter().map(|r| GeneratorLine { prompt: &r.prompt, fill: &r.fill }))
}

pub fn weigher_jsonl(records: &[WeigherRecord]) -> String {
    to_jsonl(records.iter().map(|r| WeigherLine {
        premise: &r.premise,
        hypothesis: &r.hypothesis,
        label: r.label.as_str(),
    }))
}

pub fn curve_csv(curve: &Curve) -> String {
    let mut out = String::from("x,y\n");
    for (x, y) in &curve.points {
        let _ = writeln!(out, "{x:?},{y:?}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use entgraph_core::{CurveKind, NliLabel};

    #[test]
    fn records_are_one_object_per_line() {
        let g = generator_jsonl(&[GeneratorRecord { prompt: "a \"b\"".into(), fill: "knows".into() }]);
        assert_eq!(g, "{\"prompt\":\"a \\\"b\\\"\",\"fill\":\"knows\"}\n");
        let w =
            weigher_jsonl(&[WeigherRecord { premise: "p".into(), hypothesis: "h".into(), label: NliLabel::Neutral }]);
        assert_eq!(w, "{\"premise\":\"p\",\"hypothesis\":\"h\",\"label\":\"N\"}\n");
        assert_eq!(generator_jsonl(&[]), "");
    }

    #[test]
    fn curve_rows() {
        let c = Curve { kind: CurveKind::Roc, points: vec![(0.0, 0.0), (0.5, 1.0)] };
        assert_eq!(curve_csv(&c), "x,y\n0.0,0.0\n0.5,1.0\n");
    }
}
