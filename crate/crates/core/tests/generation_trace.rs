use std::collections::{BTreeMap, BTreeSet};

use entgraph_core::{
    expand, parse_predicate, ArgType, Backend, BackendError, EmbedResponse, GenRequest, GenResponse, GenerationConfig,
    ScoreResponse, SurfaceMapper, TypePair, TypedPredicate,
};

const TRACE: &str = include_str!("data/generation_trace.tsv");

struct Trace {
    seeds: Vec<(TypedPredicate, String)>,
    outputs: Vec<(TypedPredicate, String, TypedPredicate)>,
    expected: BTreeSet<TypedPredicate>,
}

fn load() -> Trace {
    let mut t = Trace { seeds: Vec::new(), outputs: Vec::new(), expected: BTreeSet::new() };
    for line in TRACE.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split('\t').collect();
        match cols[0] {
            "seed" => t.seeds.push((parse_predicate(cols[1]).unwrap(), cols[2].to_string())),
            "out" => t.outputs.push((
                parse_predicate(cols[1]).unwrap(),
                cols[2].to_string(),
                parse_predicate(cols[3]).unwrap(),
            )),
            "final" => {
                t.expected.insert(parse_predicate(cols[1]).unwrap());
            }
            other => panic!("unknown row kind {other}"),
        }
    }
    t
}

fn person_government() -> TypePair {
    TypePair::new(ArgType::new("person").unwrap(), ArgType::new("government").unwrap())
}

/// Replays recorded model outputs keyed by prompt.
struct Scripted {
    by_prompt: BTreeMap<String, Vec<String>>,
}

impl Scripted {
    fn new(mapper: &SurfaceMapper, trace: &Trace, tp: &TypePair) -> Self {
        let mut by_prompt: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (source, sentence, _) in &trace.outputs {
            let (ab, ba) = entgraph_core::build_prompts(mapper, source, tp).unwrap();
            let tokens: Vec<&str> = sentence.split_whitespace().collect();
            let fill = tokens[2..tokens.len() - 2].join(" ");
            let prompt = if tokens[0] == "Person" { ab } else { ba };
            by_prompt.entry(prompt).or_default().push(fill);
        }
        Scripted { by_prompt }
    }
}

impl Backend for Scripted {
    fn generate(&self, req: &GenRequest) -> Result<GenResponse, BackendError> {
        let sequences = self.by_prompt.get(req.prompt()).cloned().unwrap_or_default();
        Ok(GenResponse { sequences })
    }
    fn embed(&self, _: &str) -> Result<EmbedResponse, BackendError> {
        Err(BackendError::Unreachable("generation only".into()))
    }
    fn score(&self, _: &str, _: &str) -> Result<ScoreResponse, BackendError> {
        Err(BackendError::Unreachable("generation only".into()))
    }
    fn embed_dim(&self) -> usize {
        0
    }
}

#[test]
fn seeds_render_to_recorded_sentences() {
    let m = SurfaceMapper::bundled();
    let tp = person_government();
    for (p, sentence) in load().seeds {
        assert_eq!(m.render(&p, &tp).unwrap().text, sentence);
    }
}

#[test]
fn every_recorded_sentence_resolves_to_its_tuple() {
    let m = SurfaceMapper::bundled();
    let tp = person_government();
    let trace = load();
    let distinct: BTreeSet<_> = trace.outputs.iter().map(|(_, _, p)| p.clone()).collect();
    for (_, sentence, want) in &trace.outputs {
        assert_eq!(m.resolve(sentence, &tp).as_ref(), Some(want), "{sentence}");
    }
    assert!(distinct.len() >= 17);
}

#[test]
fn final_predicates_round_trip() {
    let m = SurfaceMapper::bundled();
    let tp = person_government();
    let trace = load();
    assert_eq!(trace.expected.len(), 17);
    for p in &trace.expected {
        let s = m.render(p, &tp).unwrap();
        assert_eq!(m.resolve(&s.text, &tp).as_ref(), Some(p), "{}", s.text);
    }
}

#[test]
fn replay_reproduces_final_set() {
    let m = SurfaceMapper::bundled();
    let tp = person_government();
    let trace = load();
    let backend = Scripted::new(&m, &trace, &tp);
    let seeds: BTreeSet<_> = trace.seeds.iter().map(|(p, _)| p.clone()).collect();
    let cfg = GenerationConfig { k_p: 15, k_beam: 8, k_sent: 8, max_fill_tokens: 5 };
    let out = expand(&m, &seeds, &tp, &cfg, &backend).unwrap();
    assert_eq!(out.predicates, trace.expected);
    assert_eq!(out.stages, 2);
    assert!(out.aborted.is_none());
    let first: BTreeSet<String> = out.trace[0].promoted.iter().map(|p| p.to_string()).collect();
    let want: BTreeSet<String> = [
        "(associate.2,associate.with.2,person,government)",
        "(identify.1,identify.with.2,person,government)",
        "(connect.2,connect.with.2,person,government)",
        "(draw.2,draw.to.2,government,person)",
        "(associate.2,associate.with.2,government,person)",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    assert_eq!(first, want);
}
