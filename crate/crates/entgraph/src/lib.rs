//! File formats, the HTTP model backend, pipeline stages and the
//! command-line driver around [`entgraph_core`].

pub use entgraph_core as core;

pub mod error;
pub mod formats;

pub use error::{read_text, write_file, ConfigError, Error, FormatError, Result};
pub mod config;
pub mod http;
pub mod pipeline;
