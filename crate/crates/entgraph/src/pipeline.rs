//! Pipeline stages over in-memory artifacts. Each stage is deterministic
//! given its inputs and a deterministic backend, so running the stages one
//! by one through files gives the same results as a single run.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use entgraph_core::selector::{
    merge_top, select_shard, theorem_audit, train_head, AuditReport, LabeledVectors, TrainReport,
};
use entgraph_core::{
    auc, build_graph, expand, generator_records, pr_curve, roc_curve, score_edges, score_pairs, type_pair_of,
    weigher_records, Backend, Curve, EntailmentGraph, GenerationConfig, GraphCollection, HeadDims, LabeledPair,
    Lexicon, MockBackend, ScoreSource, SelectorTrainConfig, SphereHead, Split, Strategies, SurfaceMapper, TypePair,
    TypedPredicate, WeightedEdge,
};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{read_text, write_file, Error, FormatError, Result};
use crate::formats::binary::EmbeddingCache;
use crate::formats::{DatasetCounts, PredicateFile, PredicateGroup};
use crate::http::HttpBackend;

pub type SharedBackend = Box<dyn Backend + Send + Sync>;

pub fn make_backend(cfg: &PipelineConfig) -> SharedBackend {
    match cfg.backend.http() {
        Some(http) => Box::new(HttpBackend::new(&http)),
        None => Box::new(MockBackend::new(cfg.seed, cfg.backend.embed_dim)),
    }
}

pub fn make_mapper(cfg: &PipelineConfig) -> Result<SurfaceMapper> {
    let Some(path) = &cfg.lexicon_path else {
        return Ok(SurfaceMapper::bundled());
    };
    let lexicon =
        Lexicon::parse(&read_text(path)?).map_err(|e| Error::format(path, FormatError::line(e.line, e.reason)))?;
    Ok(SurfaceMapper::new(lexicon))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupGeneration {
    pub type_pair: String,
    pub seeds: usize,
    pub predicates: usize,
    pub stages: usize,
}

/// Expands every type pair's seeds; a backend failure fails the stage.
pub fn generate(
    mapper: &SurfaceMapper,
    seeds: &PredicateFile,
    cfg: &GenerationConfig,
    backend: &dyn Backend,
) -> Result<(PredicateFile, Vec<GroupGeneration>)> {
    let mut groups = Vec::new();
    let mut summary = Vec::new();
    for g in seeds.groups().filter(|g| !g.predicates.is_empty()) {
        let set: BTreeSet<TypedPredicate> = g.predicates.iter().cloned().collect();
        let outcome = expand(mapper, &set, &g.type_pair, cfg, backend)?;
        if let Some(e) = outcome.aborted {
            return Err(e.into());
        }
        summary.push(GroupGeneration {
            type_pair: g.type_pair.to_string(),
            seeds: set.len(),
            predicates: outcome.predicates.len(),
            stages: outcome.stages,
        });
        groups.push(PredicateGroup {
            type_pair: g.type_pair.clone(),
            predicates: outcome.predicates.into_iter().collect(),
        });
    }
    Ok((PredicateFile::from_groups(groups), summary))
}

/// Embeds the sentence of every renderable predicate.
pub fn embed(mapper: &SurfaceMapper, predicates: &PredicateFile, backend: &dyn Backend) -> Result<EmbeddingCache> {
    let mut cache = EmbeddingCache::new(backend.embed_dim());
    for g in predicates.groups() {
        let mut keys = Vec::new();
        let mut sentences = Vec::new();
        for p in &g.predicates {
            match mapper.render(p, &g.type_pair) {
                Ok(s) => {
                    keys.push(p.clone());
                    sentences.push(s.text);
                }
                Err(e) => log::warn!("not embedding {p}: {e}"),
            }
        }
        for (p, r) in keys.into_iter().zip(backend.embed_batch(&sentences)) {
            let inserted = cache.insert(p, r?.vector);
            debug_assert!(inserted, "validated embeddings have the cache dimension");
        }
    }
    Ok(cache)
}

/// Top `k_edge` ordered pairs per type pair by selector score, carried as
/// edges whose weight is the score. Scoring is split over `shards` threads.
pub fn select(cache: &EmbeddingCache, head: &SphereHead, k_edge: usize, shards: usize) -> Result<Vec<WeightedEdge>> {
    let mut groups: BTreeMap<TypePair, Vec<(&TypedPredicate, &[f64])>> = BTreeMap::new();
    for (p, v) in cache.iter() {
        groups.entry(type_pair_of(p)).or_default().push((p, v));
    }
    let mut out = Vec::new();
    for members in groups.values() {
        let spheres = members.iter().map(|(_, v)| head.sphere_of(v)).collect::<Result<Vec<_>, _>>()?;
        let n = spheres.len();
        let shards = shards.clamp(1, n.max(1));
        let per = n.div_ceil(shards);
        let parts: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..shards)
                .map(|i| {
                    let spheres = &spheres;
                    s.spawn(move || select_shard(spheres, (i * per).min(n)..((i + 1) * per).min(n), k_edge))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("selector shard panicked")).collect()
        });
        out.extend(merge_top(parts, k_edge).into_iter().map(|e| WeightedEdge {
            src: members[e.src].0.clone(),
            dst: members[e.dst].0.clone(),
            weight: e.score,
        }));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeighFailure {
    pub src: String,
    pub dst: String,
    pub reason: String,
}

/// Weighs selected pairs, grouped by type pair in canonical order and in
/// input order within a group. Pairs that fail get no edge.
pub fn weigh(
    mapper: &SurfaceMapper,
    predicates: &PredicateFile,
    selected: &[WeightedEdge],
    backend: &dyn Backend,
) -> (Vec<WeightedEdge>, Vec<WeighFailure>) {
    let mut groups: BTreeMap<TypePair, Vec<(TypedPredicate, TypedPredicate)>> = BTreeMap::new();
    for e in selected {
        groups.entry(type_pair_of(&e.src)).or_default().push((e.src.clone(), e.dst.clone()));
    }
    let mut edges = Vec::new();
    let mut failures = Vec::new();
    for (canonical, pairs) in groups {
        let tp = predicates.group(&canonical).map_or(canonical, |g| g.type_pair.clone());
        let scored = score_edges(mapper, &pairs, &tp, backend);
        edges.extend(scored.edges);
        failures.extend(scored.failures.into_iter().map(|f| WeighFailure {
            src: f.src.to_string(),
            dst: f.dst.to_string(),
            reason: f.reason,
        }));
    }
    (edges, failures)
}

/// One graph per predicate group.
pub fn build(predicates: &PredicateFile, edges: &[WeightedEdge]) -> Result<GraphCollection> {
    let mut by_pair: BTreeMap<TypePair, Vec<WeightedEdge>> = BTreeMap::new();
    for e in edges {
        by_pair.entry(type_pair_of(&e.src)).or_default().push(e.clone());
    }
    let mut collection = GraphCollection::new();
    for g in predicates.groups() {
        let edges = by_pair.remove(&g.type_pair.canonical()).unwrap_or_default();
        collection.insert(build_graph(&g.type_pair, g.predicates.iter().cloned(), edges)?)?;
    }
    if let Some((tp, _)) = by_pair.into_iter().next() {
        return Err(Error::Usage(format!("edges for {tp} but no predicates of that type pair")));
    }
    Ok(collection)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SourceCounts {
    pub graph: usize,
    pub lemma_backup: usize,
    pub average_backup: usize,
    pub missing: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StrategyFlags {
    pub relaxed_match: bool,
    pub lemma_backup: bool,
    pub average_backup: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub dataset: String,
    /// Split the areas were computed on: "test" when the dataset has one.
    pub evaluated_split: String,
    pub counts: DatasetCounts,
    pub evaluated_pairs: usize,
    pub auc_pr: f64,
    pub auc_roc: f64,
    pub precision_floor: Option<f64>,
    pub auc_pr_above_floor: Option<f64>,
    pub strategies: StrategyFlags,
    pub sources: SourceCounts,
    /// The backup strategies are local definitions, not the reference scripts.
    pub backup_semantics: &'static str,
}

pub struct Evaluation {
    pub report: EvalReport,
    pub pr: Curve,
    pub roc: Curve,
}

/// Scores the test split (every pair when no split is marked) and computes
/// curve areas.
pub fn evaluate(
    name: &str,
    collection: &GraphCollection,
    pairs: &[LabeledPair],
    strategies: Strategies,
    precision_floor: Option<f64>,
    mapper: &SurfaceMapper,
) -> Result<Evaluation> {
    let has_test = pairs.iter().any(|p| p.split == Some(Split::Test));
    let chosen: Vec<LabeledPair> =
        pairs.iter().filter(|p| !has_test || p.split == Some(Split::Test)).cloned().collect();
    let scored = score_pairs(collection, &chosen, strategies, mapper);
    let mut sources = SourceCounts::default();
    for (_, src) in &scored {
        match src {
            ScoreSource::Graph => sources.graph += 1,
            ScoreSource::LemmaBackup => sources.lemma_backup += 1,
            ScoreSource::AverageBackup => sources.average_backup += 1,
            ScoreSource::Missing => sources.missing += 1,
        }
    }
    let scores: Vec<f64> = scored.iter().map(|(s, _)| *s).collect();
    let labels: Vec<bool> = chosen.iter().map(|p| p.label).collect();
    let pr = pr_curve(&scores, &labels)?;
    let roc = roc_curve(&scores, &labels)?;
    let report = EvalReport {
        dataset: name.to_string(),
        evaluated_split: if has_test { "test" } else { "all" }.to_string(),
        counts: DatasetCounts::of(pairs),
        evaluated_pairs: chosen.len(),
        auc_pr: auc(&pr, None),
        auc_roc: auc(&roc, None),
        precision_floor,
        auc_pr_above_floor: precision_floor.map(|f| auc(&pr, Some(f))),
        strategies: StrategyFlags {
            relaxed_match: strategies.relaxed_match,
            lemma_backup: strategies.lemma_backup,
            average_backup: strategies.average_backup,
        },
        sources,
        backup_semantics: "substitute",
    };
    Ok(Evaluation { report, pr, roc })
}

fn premise_pair(p: &TypedPredicate) -> TypePair {
    TypePair::new(p.type1().clone(), p.type2().clone())
}

/// Embeds both sides of each pair under the premise's orientation; pairs
/// that cannot be rendered are skipped.
pub fn embed_pairs(
    mapper: &SurfaceMapper,
    pairs: &[LabeledPair],
    backend: &dyn Backend,
) -> Result<Vec<LabeledVectors>> {
    let mut kept = Vec::new();
    let mut sentences = Vec::new();
    for pair in pairs {
        let tp = premise_pair(&pair.premise);
        match (mapper.render(&pair.premise, &tp), mapper.render(&pair.hypothesis, &tp)) {
            (Ok(a), Ok(b)) => {
                kept.push(pair.label);
                sentences.push(a.text);
                sentences.push(b.text);
            }
            (Err(e), _) | (_, Err(e)) => log::warn!("skipping training pair: {e}"),
        }
    }
    let vectors =
        backend.embed_batch(&sentences).into_iter().map(|r| r.map(|e| e.vector)).collect::<Result<Vec<_>, _>>()?;
    Ok(kept
        .into_iter()
        .zip(vectors.chunks_exact(2))
        .map(|(label, v)| LabeledVectors { premise: v[0].clone(), hypothesis: v[1].clone(), label })
        .collect())
}

/// Trains a head on the validation split (every pair when none is marked),
/// early-stopping on the same pairs.
pub fn train_selector(
    mapper: &SurfaceMapper,
    pairs: &[LabeledPair],
    backend: &dyn Backend,
    dims: HeadDims,
    f_plus: entgraph_core::FPlus,
    cfg: &SelectorTrainConfig,
) -> Result<(SphereHead, TrainReport)> {
    let has_valid = pairs.iter().any(|p| p.split == Some(Split::Valid));
    let chosen: Vec<LabeledPair> =
        pairs.iter().filter(|p| !has_valid || p.split == Some(Split::Valid)).cloned().collect();
    let data = embed_pairs(mapper, &chosen, backend)?;
    let init = SphereHead::init(dims, f_plus, cfg.seed);
    Ok(train_head(init, &data, &[], cfg)?)
}

pub fn load_or_init_head(cfg: &PipelineConfig) -> Result<SphereHead> {
    match &cfg.checkpoint {
        Some(path) => {
            let head = crate::formats::read_head(path)?;
            if head.dims().d_v != cfg.backend.embed_dim {
                return Err(Error::format(
                    path,
                    FormatError::binary(format!("head expects {}-dimensional embeddings", head.dims().d_v)),
                ));
            }
            Ok(head)
        }
        None => Ok(SphereHead::init(cfg.head_dims, cfg.f_plus, cfg.seed)),
    }
}

pub fn audit_embeddings(
    cache: &EmbeddingCache,
    head: &SphereHead,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<AuditReport> {
    let spheres = cache.iter().map(|(_, v)| head.sphere_of(v)).collect::<Result<Vec<_>, _>>()?;
    Ok(theorem_audit(&spheres, eps, trials, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinetuneTarget {
    Generator,
    Weigher,
}

pub fn export_finetune(mapper: &SurfaceMapper, pairs: &[LabeledPair], target: FinetuneTarget) -> String {
    match target {
        FinetuneTarget::Generator => crate::formats::export::generator_jsonl(&generator_records(mapper, pairs)),
        FinetuneTarget::Weigher => crate::formats::export::weigher_jsonl(&weigher_records(mapper, pairs)),
    }
}

/// Paths of every artifact a full run writes inside its work directory.
pub struct RunLayout {
    pub predicates: std::path::PathBuf,
    pub embeddings: std::path::PathBuf,
    pub selected: std::path::PathBuf,
    pub weighted: std::path::PathBuf,
    pub graphs: std::path::PathBuf,
    pub report: std::path::PathBuf,
}

impl RunLayout {
    pub fn in_dir(dir: &Path) -> Self {
        RunLayout {
            predicates: dir.join("predicates.txt"),
            embeddings: dir.join("embeddings.bin"),
            selected: dir.join("selected.edges"),
            weighted: dir.join("weighted.edges"),
            graphs: dir.join("graphs"),
            report: dir.join("report.jsonl"),
        }
    }
}

pub fn write_graphs(dir: &Path, collection: &GraphCollection) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for g in collection.iter() {
        crate::formats::write_egg(&dir.join(crate::formats::egg_file_name(g.type_pair())), g)?;
    }
    Ok(())
}

/// Loads every `.egg` file of a directory, in file-name order.
pub fn read_graphs(dir: &Path) -> Result<GraphCollection> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "egg"))
        .collect();
    paths.sort();
    let mut collection = GraphCollection::new();
    for p in paths {
        let graph: EntailmentGraph = crate::formats::read_egg(&p)?;
        collection.insert(graph)?;
    }
    Ok(collection)
}

pub fn write_eval(report_path: &Path, curves_dir: Option<&Path>, ev: &Evaluation) -> Result<()> {
    write_file(report_path, crate::formats::export::to_jsonl([&ev.report]))?;
    if let Some(dir) = curves_dir {
        write_file(&dir.join("pr.csv"), crate::formats::export::curve_csv(&ev.pr))?;
        write_file(&dir.join("roc.csv"), crate::formats::export::curve_csv(&ev.roc))?;
    }
    Ok(())
}

/// Runs every stage from seeds to the evaluation report, writing each
/// artifact under `dir` exactly as the per-stage commands would.
pub fn run_all(cfg: &PipelineConfig, seeds: &Path, dataset: &Path, dir: &Path) -> Result<EvalReport> {
    let layout = RunLayout::in_dir(dir);
    let backend = make_backend(cfg);
    let mapper = make_mapper(cfg)?;
    let seed_file = crate::formats::read_predicate_file(seeds)?;
    let (preds, _) = generate(&mapper, &seed_file, &cfg.generation, backend.as_ref())?;
    crate::formats::write_predicate_file(&layout.predicates, &preds)?;
    let cache = embed(&mapper, &preds, backend.as_ref())?;
    crate::formats::write_embeddings(&layout.embeddings, &cache)?;
    let head = load_or_init_head(cfg)?;
    let selected = select(&cache, &head, cfg.k_edge, cfg.shards)?;
    crate::formats::write_edges(&layout.selected, &selected)?;
    let (weighted, failures) = weigh(&mapper, &preds, &selected, backend.as_ref());
    for f in &failures {
        log::warn!("no edge {} -> {}: {}", f.src, f.dst, f.reason);
    }
    crate::formats::write_edges(&layout.weighted, &weighted)?;
    let graphs = build(&preds, &weighted)?;
    write_graphs(&layout.graphs, &graphs)?;
    let pairs = crate::formats::load_dataset(dataset)?;
    let name = dataset.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let mut graphs = graphs;
    graphs.index_sentences(&mapper);
    let ev = evaluate(&name, &graphs, &pairs, cfg.strategies, cfg.precision_floor, &mapper)?;
    write_eval(&layout.report, Some(dir), &ev)?;
    Ok(ev.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::parse_predicate_file;

    fn seeds() -> PredicateFile {
        parse_predicate_file(
            "#types\tperson\tgovernment\n(adore.1,adore.2,person,government)\n(know.1,know.2,person,government)\n(be.1,be.magnet.for.2,person,government)\n",
        )
        .unwrap()
    }

    fn small() -> PipelineConfig {
        let mut c = PipelineConfig {
            generation: GenerationConfig { k_p: 12, k_beam: 8, k_sent: 8, max_fill_tokens: 5 },
            head_dims: HeadDims { d_v: 16, d_c: 4, hidden: 8 },
            seed: 7,
            ..PipelineConfig::default()
        };
        c.backend.embed_dim = 16;
        c
    }

    #[test]
    fn stages_chain_on_the_mock() {
        let cfg = small();
        let backend = make_backend(&cfg);
        let mapper = make_mapper(&cfg).unwrap();
        let (preds, summary) = generate(&mapper, &seeds(), &cfg.generation, backend.as_ref()).unwrap();
        assert_eq!(summary.len(), 1);
        assert!(preds.len() >= 3);
        assert!(seeds().predicates().all(|s| preds.predicates().any(|p| p == s)));

        let cache = embed(&mapper, &preds, backend.as_ref()).unwrap();
        assert_eq!(cache.len(), preds.len());
        let head = load_or_init_head(&cfg).unwrap();
        let n = cache.len();
        let all = select(&cache, &head, usize::MAX, 3).unwrap();
        assert_eq!(all.len(), n * (n - 1));
        let top = select(&cache, &head, 5, 2).unwrap();
        assert_eq!(top, select(&cache, &head, 5, 1).unwrap());
        assert_eq!(&all[..5], &top[..]);

        let (weighted, failures) = weigh(&mapper, &preds, &top, backend.as_ref());
        assert!(failures.is_empty());
        assert!(weighted.iter().all(|e| (0.0..=1.0).contains(&e.weight)));
        let graphs = build(&preds, &weighted).unwrap();
        assert_eq!(graphs.len(), 1);
        assert_eq!(graphs.iter().next().unwrap().edge_count(), 5);
    }

    #[test]
    fn build_rejects_orphan_edges() {
        let edge = WeightedEdge {
            src: entgraph_core::parse_predicate("(fear.1,fear.2,person,location)").unwrap(),
            dst: entgraph_core::parse_predicate("(obey.1,obey.2,person,location)").unwrap(),
            weight: 0.5,
        };
        assert!(build(&seeds(), &[edge]).is_err());
    }
}
