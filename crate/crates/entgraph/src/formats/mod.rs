//! On-disk formats.

pub mod binary;
pub mod dataset;
pub mod egg;
pub mod export;
pub mod predicates;

pub use binary::{read_embeddings, read_head, write_embeddings, write_head, EmbeddingCache};
pub use dataset::{load_dataset, parse_dataset, DatasetCounts};
pub use egg::{egg_file_name, parse_edges, parse_egg, read_edges, read_egg, to_egg_string, write_edges, write_egg};
pub use predicates::{parse_predicate_file, read_predicate_file, write_predicate_file, PredicateFile, PredicateGroup};
