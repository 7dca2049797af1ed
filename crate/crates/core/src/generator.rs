//! Predicate generator: grows a seed set by prompting a generative model
//! with each frontier predicate's sentence and keeping predicates produced
//! from at least two different sources.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::backend::{Backend, BackendError, GenRequest, FILL_MARKER};
use crate::predicate::{Letter, TypePair, TypedPredicate};
use crate::surface::{SurfaceError, SurfaceMapper};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeneratorError {
    #[error("seed set is empty")]
    EmptySeeds,
    #[error("seed {predicate} does not belong to type pair {type_pair}")]
    ForeignSeed { predicate: String, type_pair: String },
    #[error("invalid generation config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerationConfig {
    pub k_p: usize,
    pub k_beam: u32,
    pub k_sent: u32,
    pub max_fill_tokens: u32,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig { k_p: 5000, k_beam: 50, k_sent: 50, max_fill_tokens: 5 }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        if self.k_p == 0 || self.k_beam == 0 || self.k_sent == 0 || self.max_fill_tokens == 0 {
            return Err(GeneratorError::InvalidConfig("all generation parameters must be positive"));
        }
        if self.k_sent > self.k_beam {
            return Err(GeneratorError::InvalidConfig("k_sent must not exceed k_beam"));
        }
        Ok(())
    }
}

/// Argument order of a prompt's continuation frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// "<type of A> A <FILL> <type of B> B."
    AB,
    /// "<type of B> B <FILL> <type of A> A."
    BA,
}

impl Orientation {
    fn letters(self) -> (Letter, Letter) {
        match self {
            Orientation::AB => (Letter::A, Letter::B),
            Orientation::BA => (Letter::B, Letter::A),
        }
    }
}

fn frame(tp: &TypePair, orientation: Orientation, middle: &str) -> String {
    let (first, second) = orientation.letters();
    format!(
        "{} {} {} {} {}.",
        tp.type_of(first).title_case(),
        first.as_str(),
        middle,
        tp.type_of(second).title_case(),
        second.as_str()
    )
}

/// The two continuation prompts for `p`, AB orientation first.
pub fn build_prompts(
    mapper: &SurfaceMapper,
    p: &TypedPredicate,
    tp: &TypePair,
) -> Result<(String, String), SurfaceError> {
    let s = mapper.render(p, tp)?.text;
    let prompt = |o| format!("{s}, which entails that {}", frame(tp, o, FILL_MARKER));
    Ok((prompt(Orientation::AB), prompt(Orientation::BA)))
}

/// Wraps each fill in its argument frame and resolves it; unresolvable
/// fills are dropped and duplicates collapse.
pub fn resolve_outputs(
    mapper: &SurfaceMapper,
    fills: &[String],
    orientation: Orientation,
    tp: &TypePair,
) -> BTreeSet<TypedPredicate> {
    fills.iter().filter_map(|fill| mapper.resolve(&frame(tp, orientation, fill.trim()), tp)).collect()
}

/// What one frontier predicate produced during a stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceTrace {
    pub source: TypedPredicate,
    /// Resolved outputs not already in the accumulated set.
    pub generated: Vec<TypedPredicate>,
    /// Outputs promoted because this was their second source.
    pub promoted: Vec<TypedPredicate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageTrace {
    pub stage: usize,
    pub sources: Vec<SourceTrace>,
    pub promoted: Vec<TypedPredicate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationOutcome {
    pub predicates: BTreeSet<TypedPredicate>,
    /// Number of completed stages.
    pub stages: usize,
    pub trace: Vec<StageTrace>,
    /// Set when a backend failure cut the run short; `predicates` then holds
    /// the result of the last completed stage.
    pub aborted: Option<BackendError>,
}

/// Runs the generator to a fixpoint or until the accumulated set exceeds
/// `cfg.k_p`. Frontier predicates are processed in canonical order.
pub fn expand(
    mapper: &SurfaceMapper,
    seeds: &BTreeSet<TypedPredicate>,
    tp: &TypePair,
    cfg: &GenerationConfig,
    backend: &dyn Backend,
) -> Result<GenerationOutcome, GeneratorError> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(GeneratorError::EmptySeeds);
    }
    if let Some(p) = seeds.iter().find(|p| !tp.houses(p)) {
        return Err(GeneratorError::ForeignSeed { predicate: format!("{p}"), type_pair: format!("{tp}") });
    }

    let mut once: BTreeSet<TypedPredicate> = BTreeSet::new();
    let mut accumulated = seeds.clone();
    let mut frontier = seeds.clone();
    let mut outcome = GenerationOutcome { predicates: BTreeSet::new(), stages: 0, trace: Vec::new(), aborted: None };

    while accumulated.len() <= cfg.k_p {
        let mut sources = Vec::new();
        let mut requests = Vec::new();
        for p in &frontier {
            let (ab, ba) = match build_prompts(mapper, p, tp) {
                Ok(prompts) => prompts,
                Err(e) => {
                    log::warn!("skipping frontier predicate: {e}");
                    continue;
                }
            };
            let req = |prompt| GenRequest::new(prompt, cfg.k_beam, cfg.k_sent, cfg.max_fill_tokens);
            match (req(ab), req(ba)) {
                (Ok(a), Ok(b)) => {
                    sources.push(p.clone());
                    requests.push(a);
                    requests.push(b);
                }
                (Err(e), _) | (_, Err(e)) => {
                    log::warn!("skipping frontier predicate {p}: {e}");
                }
            }
        }

        let responses = backend.generate_batch(&requests);
        let mut fills = Vec::with_capacity(responses.len());
        for r in responses {
            match r {
                Ok(resp) => fills.push(resp.sequences),
                Err(e) => {
                    log::warn!("generation stage {} aborted: {e}", outcome.stages + 1);
                    outcome.aborted = Some(e);
                    outcome.predicates = accumulated;
                    return Ok(outcome);
                }
            }
        }

        let mut next = BTreeSet::new();
        let mut stage = StageTrace { stage: outcome.stages + 1, sources: Vec::new(), promoted: Vec::new() };
        for (i, source) in sources.into_iter().enumerate() {
            let mut generated = resolve_outputs(mapper, &fills[2 * i], Orientation::AB, tp);
            generated.extend(resolve_outputs(mapper, &fills[2 * i + 1], Orientation::BA, tp));
            let generated: BTreeSet<_> = generated.difference(&accumulated).cloned().collect();
            let promoted: Vec<_> = generated.intersection(&once).cloned().collect();
            next.extend(promoted.iter().cloned());
            once = once.symmetric_difference(&generated).cloned().collect();
            stage.sources.push(SourceTrace { source, generated: generated.into_iter().collect(), promoted });
        }
        let next: BTreeSet<_> = next.difference(&accumulated).cloned().collect();
        stage.promoted = next.iter().cloned().collect();
        outcome.trace.push(stage);
        outcome.stages += 1;
        if next.is_empty() {
            break;
        }
        accumulated.extend(next.iter().cloned());
        frontier = next;
    }
    outcome.predicates = accumulated;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{EmbedResponse, GenResponse, MockBackend, ScoreResponse};
    use crate::predicate::{parse_predicate, ArgType};
    use alloc::string::ToString;
    use alloc::vec;

    fn pg() -> TypePair {
        TypePair::new(ArgType::new("person").unwrap(), ArgType::new("government").unwrap())
    }

    fn preds(items: &[&str]) -> BTreeSet<TypedPredicate> {
        items.iter().map(|s| parse_predicate(s).unwrap()).collect()
    }

    struct Fixed(Vec<String>);

    impl Backend for Fixed {
        fn generate(&self, _: &GenRequest) -> Result<GenResponse, BackendError> {
            Ok(GenResponse { sequences: self.0.clone() })
        }
        fn embed(&self, _: &str) -> Result<EmbedResponse, BackendError> {
            Err(BackendError::Unreachable("unused".into()))
        }
        fn score(&self, _: &str, _: &str) -> Result<ScoreResponse, BackendError> {
            Err(BackendError::Unreachable("unused".into()))
        }
        fn embed_dim(&self) -> usize {
            0
        }
    }

    struct Down;

    impl Backend for Down {
        fn generate(&self, _: &GenRequest) -> Result<GenResponse, BackendError> {
            Err(BackendError::Unreachable("connection refused".into()))
        }
        fn embed(&self, _: &str) -> Result<EmbedResponse, BackendError> {
            Err(BackendError::Unreachable("connection refused".into()))
        }
        fn score(&self, _: &str, _: &str) -> Result<ScoreResponse, BackendError> {
            Err(BackendError::Unreachable("connection refused".into()))
        }
        fn embed_dim(&self) -> usize {
            0
        }
    }

    #[test]
    fn builds_both_prompts() {
        let m = SurfaceMapper::bundled();
        let p = parse_predicate("(adore.1,adore.2,person,government)").unwrap();
        let (ab, ba) = build_prompts(&m, &p, &pg()).unwrap();
        assert_eq!(ab, "Person A adores Government B, which entails that Person A <FILL> Government B.");
        assert_eq!(ba, "Person A adores Government B, which entails that Government B <FILL> Person A.");
        let tt = TypePair::new(ArgType::new("thing").unwrap(), ArgType::new("thing").unwrap());
        let p = parse_predicate("(eat.1,eat.2,thing,thing)").unwrap();
        let (ab, ba) = build_prompts(&m, &p, &tt).unwrap();
        assert!(ab.ends_with("Thing A <FILL> Thing B."));
        assert!(ba.ends_with("Thing B <FILL> Thing A."));
    }

    #[test]
    fn resolves_fills() {
        let m = SurfaceMapper::bundled();
        let got = resolve_outputs(&m, &["is identified with".to_string()], Orientation::AB, &pg());
        assert_eq!(got, preds(&["(identify.2,identify.with.2,person,government)"]));
        assert!(resolve_outputs(&m, &["xyzzy plugh".to_string()], Orientation::AB, &pg()).is_empty());
        let got = resolve_outputs(&m, &["adores".to_string(), "adores".to_string()], Orientation::BA, &pg());
        assert_eq!(got, preds(&["(adore.1,adore.2,government,person)"]));
    }

    #[test]
    fn unresolvable_outputs_reach_fixpoint_in_one_stage() {
        let m = SurfaceMapper::bundled();
        let seeds = preds(&["(adore.1,adore.2,person,government)"]);
        let out = expand(&m, &seeds, &pg(), &GenerationConfig::default(), &Fixed(vec!["xyzzy plugh".into()])).unwrap();
        assert_eq!(out.predicates, seeds);
        assert_eq!(out.stages, 1);
    }

    #[test]
    fn oversized_seed_set_runs_no_stage() {
        let m = SurfaceMapper::bundled();
        let seeds = preds(&["(adore.1,adore.2,person,government)", "(know.1,know.2,person,government)"]);
        let cfg = GenerationConfig { k_p: 1, ..GenerationConfig::default() };
        let out = expand(&m, &seeds, &pg(), &cfg, &Down).unwrap();
        assert_eq!(out.predicates, seeds);
        assert_eq!(out.stages, 0);
        assert!(out.aborted.is_none());
    }

    #[test]
    fn backend_failure_keeps_last_stage() {
        let m = SurfaceMapper::bundled();
        let seeds = preds(&["(adore.1,adore.2,person,government)"]);
        let out = expand(&m, &seeds, &pg(), &GenerationConfig::default(), &Down).unwrap();
        assert_eq!(out.predicates, seeds);
        assert!(matches!(out.aborted, Some(BackendError::Unreachable(_))));
    }

    #[test]
    fn single_source_outputs_are_not_promoted() {
        let m = SurfaceMapper::bundled();
        let seeds = preds(&["(adore.1,adore.2,person,government)"]);
        let out = expand(&m, &seeds, &pg(), &GenerationConfig::default(), &Fixed(vec!["trusts".into()])).unwrap();
        // both orientations of one source count as a single source
        assert_eq!(out.predicates, seeds);
    }

    #[test]
    fn two_sources_promote() {
        let m = SurfaceMapper::bundled();
        let seeds = preds(&["(adore.1,adore.2,person,government)", "(know.1,know.2,person,government)"]);
        let out = expand(&m, &seeds, &pg(), &GenerationConfig::default(), &Fixed(vec!["trusts".into()])).unwrap();
        let mut want = seeds.clone();
        want.extend(preds(&["(trust.1,trust.2,person,government)", "(trust.1,trust.2,government,person)"]));
        assert_eq!(out.predicates, want);
        assert_eq!(out.stages, 2);
    }

    #[test]
    fn rejects_bad_input() {
        let m = SurfaceMapper::bundled();
        let mock = MockBackend::new(1, 4);
        let cfg = GenerationConfig::default();
        assert_eq!(expand(&m, &BTreeSet::new(), &pg(), &cfg, &mock), Err(GeneratorError::EmptySeeds));
        let foreign = preds(&["(adore.1,adore.2,person,time)"]);
        assert!(matches!(expand(&m, &foreign, &pg(), &cfg, &mock), Err(GeneratorError::ForeignSeed { .. })));
        let bad = GenerationConfig { k_sent: 60, ..cfg };
        let seeds = preds(&["(adore.1,adore.2,person,government)"]);
        assert!(matches!(expand(&m, &seeds, &pg(), &bad, &mock), Err(GeneratorError::InvalidConfig(_))));
    }
}
