//! Evaluation: graph-based pair scoring with backup strategies, PR and ROC
//! curves, their areas, score ensembling and fine-tuning records.

use alloc::string::String;
use alloc::vec::Vec;

use crate::generator::{build_prompts, Orientation};
use crate::graph::{EntailmentGraph, GraphCollection};
use crate::lexicon::Lexicon;
use crate::predicate::{type_pair_of, Letter, TypePair, TypedPredicate};
use crate::surface::{SurfaceError, SurfaceMapper};
use crate::weigher::softmax3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("curves need at least one positive and one negative label")]
    DegenerateLabels,
    #[error("{0} scores but {1} labels")]
    LengthMismatch(usize, usize),
    #[error("score {0} is not finite")]
    NonFiniteScore(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Valid,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "valid" => Some(Split::Valid),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPair {
    pub premise: TypedPredicate,
    pub hypothesis: TypedPredicate,
    pub label: bool,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// x = recall, y = precision.
    Pr,
    /// x = false positive rate, y = true positive rate.
    Roc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub kind: CurveKind,
    pub points: Vec<(f64, f64)>,
}

/// True and false positive counts per threshold step.
type Steps = Vec<(usize, usize)>;

/// Confusion counts after accepting every score at or above each distinct
/// threshold, highest threshold first.
fn sweep(scores: &[f64], labels: &[bool]) -> Result<(Steps, usize, usize), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch(scores.len(), labels.len()));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(i));
    }
    let positives = labels.iter().filter(|l| **l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut steps = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    for (n, &i) in order.iter().enumerate() {
        if labels[i] {
            tp += 1;
        } else {
            fp += 1;
        }
        // ties form one step
        let last_of_group = order.get(n + 1).is_none_or(|&j| scores[j] != scores[i]);
        if last_of_group {
            steps.push((tp, fp));
        }
    }
    Ok((steps, positives, negatives))
}

/// Precision-recall curve, anchored at (0, 1). The final step accepts every
/// pair, so the curve ends at recall 1 with the base rate as precision.
pub fn pr_curve(scores: &[f64], labels: &[bool]) -> Result<Curve, EvalError> {
    let (steps, positives, _) = sweep(scores, labels)?;
    let mut points = Vec::with_capacity(steps.len() + 1);
    points.push((0.0, 1.0));
    for (tp, fp) in steps {
        points.push((tp as f64 / positives as f64, tp as f64 / (tp + fp) as f64));
    }
    Ok(Curve { kind: CurveKind::Pr, points })
}

/// ROC curve from (0, 0) to (1, 1).
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Curve, EvalError> {
    let (steps, positives, negatives) = sweep(scores, labels)?;
    let mut points = Vec::with_capacity(steps.len() + 1);
    points.push((0.0, 0.0));
    for (tp, fp) in steps {
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
    }
    Ok(Curve { kind: CurveKind::Roc, points })
}

/// Area of the part of segment (x0,y0)-(x1,y1) lying on or above `floor`.
fn clipped_trapezoid(x0: f64, y0: f64, x1: f64, y1: f64, floor: f64) -> f64 {
    let width = x1 - x0;
    match (y0 >= floor, y1 >= floor) {
        (true, true) => width * (y0 + y1) / 2.0,
        (false, false) => 0.0,
        (above0, _) => {
            let t = (floor - y0) / (y1 - y0);
            let xc = x0 + t * width;
            if above0 {
                (xc - x0) * (y0 + floor) / 2.0
            } else {
                (x1 - xc) * (floor + y1) / 2.0
            }
        }
    }
}

/// Trapezoidal area under `curve`. With `precision_floor`, only the parts
/// of segments whose y value is at least the floor count, clipped at
/// crossings.
pub fn auc(curve: &Curve, precision_floor: Option<f64>) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            match precision_floor {
                None => (x1 - x0) * (y0 + y1) / 2.0,
                Some(floor) => clipped_trapezoid(x0, y0, x1, y1, floor),
            }
        })
        .sum()
}

/// Softmax of each logit triple, averaged component-wise.
pub fn ensemble_mean(logits1: [f64; 3], logits2: [f64; 3]) -> [f64; 3] {
    let (a, b) = (softmax3(logits1), softmax3(logits2));
    [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Strategies {
    /// Fall back to sentence-level predicate matching.
    pub relaxed_match: bool,
    /// Score 1 when both predicates lemmatize to the same relation.
    pub lemma_backup: bool,
    /// Average the pair's weight over graphs of other type pairs.
    pub average_backup: bool,
}

impl Strategies {
    pub fn all() -> Self {
        Strategies { relaxed_match: true, lemma_backup: true, average_backup: true }
    }
}

/// Which rule produced a pair's score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreSource {
    Graph,
    LemmaBackup,
    AverageBackup,
    Missing,
}

type LemmaKey = (bool, Vec<(Vec<String>, u8)>, [String; 2]);

/// Negation, lemmatized slot tokens with their argument positions, and
/// argument types.
fn lemma_key(lexicon: &Lexicon, p: &TypedPredicate) -> LemmaKey {
    let slot = |s: &crate::predicate::RelSlot| (s.words().iter().map(|w| lexicon.lemmatize(w)).collect(), s.index());
    (
        p.negated(),
        Vec::from([slot(p.slot1()), slot(p.slot2())]),
        [String::from(p.type1().as_str()), String::from(p.type2().as_str())],
    )
}

pub fn lemma_equal(lexicon: &Lexicon, p: &TypedPredicate, q: &TypedPredicate) -> bool {
    lemma_key(lexicon, p) == lemma_key(lexicon, q)
}

/// Type-substituted copies of (p, q) for `graph`: one per bijection between
/// the query's argument types and the graph's.
fn transplant(
    p: &TypedPredicate,
    q: &TypedPredicate,
    graph: &EntailmentGraph,
) -> Vec<(TypedPredicate, TypedPredicate)> {
    let query = type_pair_of(p);
    let target = graph.type_pair();
    if query.is_same_type() != target.is_same_type() {
        return Vec::new();
    }
    let mut maps = Vec::from([(target.first(), target.second())]);
    if !target.is_same_type() {
        maps.push((target.second(), target.first()));
    }
    maps.into_iter()
        .map(|(to_first, to_second)| {
            let sub =
                |t: &crate::predicate::ArgType| if t == query.first() { to_first.clone() } else { to_second.clone() };
            let move_types = |x: &TypedPredicate| x.with_types(sub(x.type1()), sub(x.type2()));
            (move_types(p), move_types(q))
        })
        .collect()
}

fn occurs(graph: &EntailmentGraph, p: &TypedPredicate, mapper: &SurfaceMapper, relaxed: bool) -> bool {
    graph.contains(p) || (relaxed && graph.contains_relaxed(p, mapper))
}

/// Scores one pair: the pair's own graph first, then the enabled backups,
/// then 0.
pub fn score_pair(
    collection: &GraphCollection,
    p: &TypedPredicate,
    q: &TypedPredicate,
    strategies: Strategies,
    mapper: &SurfaceMapper,
) -> (f64, ScoreSource) {
    let relaxed = strategies.relaxed_match.then_some(mapper);
    let own = collection.graph_for(p);
    if let Some(w) = own.and_then(|g| g.lookup(p, q, relaxed)) {
        return (w, ScoreSource::Graph);
    }
    if strategies.lemma_backup && lemma_equal(mapper.lexicon(), p, q) {
        return (1.0, ScoreSource::LemmaBackup);
    }
    if strategies.average_backup {
        let own_pair = type_pair_of(p);
        let mut found = Vec::new();
        for graph in collection.iter().filter(|g| *g.type_pair() != own_pair) {
            for (tp, tq) in transplant(p, q, graph) {
                if occurs(graph, &tp, mapper, true) && occurs(graph, &tq, mapper, true) {
                    found.push(graph.lookup(&tp, &tq, Some(mapper)).unwrap_or(0.0));
                }
            }
        }
        if !found.is_empty() {
            return (found.iter().sum::<f64>() / found.len() as f64, ScoreSource::AverageBackup);
        }
    }
    (0.0, ScoreSource::Missing)
}

pub fn score_pairs(
    collection: &GraphCollection,
    pairs: &[LabeledPair],
    strategies: Strategies,
    mapper: &SurfaceMapper,
) -> Vec<(f64, ScoreSource)> {
    pairs.iter().map(|pair| score_pair(collection, &pair.premise, &pair.hypothesis, strategies, mapper)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorRecord {
    pub prompt: String,
    pub fill: String,
}

/// Entailment-classifier label of a fine-tuning record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NliLabel {
    Entailment,
    Neutral,
}

impl NliLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            NliLabel::Entailment => "E",
            NliLabel::Neutral => "N",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeigherRecord {
    pub premise: String,
    pub hypothesis: String,
    pub label: NliLabel,
}

/// Type pair oriented by the premise's argument order.
fn premise_pair(p: &TypedPredicate) -> TypePair {
    TypePair::new(p.type1().clone(), p.type2().clone())
}

/// The prompt whose frame matches the argument order of the hypothesis
/// sentence, with the hypothesis phrase as its fill.
pub fn generator_record(mapper: &SurfaceMapper, pair: &LabeledPair) -> Result<GeneratorRecord, SurfaceError> {
    let tp = premise_pair(&pair.premise);
    let (ab, ba) = build_prompts(mapper, &pair.premise, &tp)?;
    let hyp = mapper.render(&pair.hypothesis, &tp)?.text;
    let mention = |l: Letter| {
        let mut s = tp.type_of(l).title_case();
        s.push(' ');
        s.push_str(l.as_str());
        s
    };
    let a_first = hyp.starts_with(&(mention(Letter::A) + " "));
    let (orientation, first, second) = if a_first {
        (Orientation::AB, mention(Letter::A), mention(Letter::B))
    } else {
        (Orientation::BA, mention(Letter::B), mention(Letter::A))
    };
    let fill = hyp
        .strip_prefix(first.as_str())
        .and_then(|r| r.strip_suffix(second.as_str()))
        .map(str::trim)
        .ok_or_else(|| SurfaceError::UnsupportedShape(String::from(pair.hypothesis.as_str())))?;
    let prompt = if orientation == Orientation::AB { ab } else { ba };
    Ok(GeneratorRecord { prompt, fill: String::from(fill) })
}

/// Generator records for the positive pairs; pairs whose sentences cannot
/// be rendered are skipped.
pub fn generator_records(mapper: &SurfaceMapper, pairs: &[LabeledPair]) -> Vec<GeneratorRecord> {
    pairs
        .iter()
        .filter(|p| p.label)
        .filter_map(|p| match generator_record(mapper, p) {
            Ok(r) => Some(r),
            Err(e) => {
                log::warn!("skipping fine-tuning pair: {e}");
                None
            }
        })
        .collect()
}

pub fn weigher_records(mapper: &SurfaceMapper, pairs: &[LabeledPair]) -> Vec<WeigherRecord> {
    pairs
        .iter()
        .filter_map(|pair| {
            let tp = premise_pair(&pair.premise);
            let render = |p: &TypedPredicate| mapper.render(p, &tp).map(|s| s.text);
            match (render(&pair.premise), render(&pair.hypothesis)) {
                (Ok(premise), Ok(hypothesis)) => Some(WeigherRecord {
                    premise,
                    hypothesis,
                    label: if pair.label { NliLabel::Entailment } else { NliLabel::Neutral },
                }),
                (Err(e), _) | (_, Err(e)) => {
                    log::warn!("skipping fine-tuning pair: {e}");
                    None
                }
            }
        })
        .collect()
}
