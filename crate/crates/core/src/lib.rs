//! Core types and algorithms for building typed entailment graphs.
//!
//! Everything here is `no_std` + `alloc`; file formats, HTTP transport and
//! the command-line driver live in the `entgraph` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod backend;
pub mod eval;
pub mod generator;
pub mod graph;
pub mod lexicon;
pub mod predicate;
pub mod selector;
pub mod surface;
pub mod weigher;

pub use backend::{
    Backend, BackendError, EmbedResponse, GenRequest, GenResponse, MockBackend, ScoreResponse, FILL_MARKER,
};
pub use eval::{
    auc, ensemble_mean, generator_records, lemma_equal, pr_curve, roc_curve, score_pair, score_pairs, weigher_records,
    Curve, CurveKind, EvalError, GeneratorRecord, LabeledPair, NliLabel, ScoreSource, Split, Strategies, WeigherRecord,
};
pub use generator::{
    build_prompts, expand, resolve_outputs, GenerationConfig, GenerationOutcome, GeneratorError, Orientation,
};
pub use graph::{
    augment_rte_input, build_graph, Direction, EntailmentGraph, GraphCollection, GraphError, PredicateMention,
};
pub use lexicon::{Lexicon, LexiconError, PosClass};
pub use predicate::{
    format_predicate, parse_predicate, type_pair_of, ArgType, Letter, PredicateError, RelSlot, TypePair,
    TypedPredicate, NEG_PREFIX,
};
pub use selector::{selector_score, FPlus, HeadDims, PredicateSphere, SelectorError, SelectorTrainConfig, SphereHead};
pub use surface::{normalize_sentence, SurfaceError, SurfaceMapper, TemplateSentence};
pub use weigher::{
    edge_weight, entailment_weight, score_edges, softmax3, EdgeFailure, ScoredEdges, WeigherError, WeightedEdge,
};
