//! Pipeline configuration: a JSON object with flat dotted keys, each
//! overridable from the command line as `key=value`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use entgraph_core::{FPlus, GenerationConfig, HeadDims, SelectorTrainConfig, Strategies};
use serde_json::Value;

use crate::error::{read_text, ConfigError, Error, Result};
use crate::http::HttpConfig;

/// Every recognized key with its default, as JSON.
const DEFAULTS: &[(&str, &str)] = &[
    ("seed", "0"),
    ("backend.url", "\"mock\""),
    ("backend.timeout_ms", "30000"),
    ("backend.in_flight", "8"),
    ("backend.embed_dim", "768"),
    ("lexicon.path", "null"),
    ("generation.k_p", "5000"),
    ("generation.k_beam", "50"),
    ("generation.k_sent", "50"),
    ("generation.max_fill_tokens", "5"),
    ("selector.k_edge", "20000000"),
    ("selector.d_c", "16"),
    ("selector.hidden", "16"),
    ("selector.f_plus", "\"exp\""),
    ("selector.checkpoint", "null"),
    ("selector.shards", "4"),
    ("selector.learning_rate", "0.0005"),
    ("selector.repetition", "5"),
    ("selector.patience", "10"),
    ("selector.max_epochs", "500"),
    ("selector.batch_size", "32"),
    ("selector.weight_decay", "0.01"),
    ("augment.k_nbr", "5"),
    ("eval.relaxed_match", "true"),
    ("eval.lemma_backup", "true"),
    ("eval.average_backup", "true"),
    ("eval.precision_floor", "null"),
    ("audit.epsilon", "0.9"),
    ("audit.trials", "100000"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct BackendSettings {
    /// `None` selects the in-process mock.
    pub url: Option<String>,
    pub timeout: Duration,
    pub in_flight: usize,
    pub embed_dim: usize,
}

impl BackendSettings {
    pub fn http(&self) -> Option<HttpConfig> {
        self.url.as_ref().map(|url| HttpConfig {
            base_url: url.clone(),
            timeout: self.timeout,
            in_flight: self.in_flight,
            embed_dim: self.embed_dim,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub backend: BackendSettings,
    pub lexicon_path: Option<PathBuf>,
    pub generation: GenerationConfig,
    pub k_edge: usize,
    pub head_dims: HeadDims,
    pub f_plus: FPlus,
    pub checkpoint: Option<PathBuf>,
    pub shards: usize,
    pub train: SelectorTrainConfig,
    pub k_nbr: usize,
    pub strategies: Strategies,
    pub precision_floor: Option<f64>,
    pub audit_epsilon: f64,
    pub audit_trials: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        ConfigBuilder::new().build().expect("defaults are valid")
    }
}

/// Raw key/value layer collected from files and overrides.
#[derive(Debug, Clone)]
pub struct ConfigBuilder {
    values: BTreeMap<String, Value>,
}

impl Default for ConfigBuilder {
    fn default() -> Self {
        ConfigBuilder::new()
    }
}

impl ConfigBuilder {
    pub fn new() -> Self {
        let values = DEFAULTS
            .iter()
            .map(|(k, v)| (k.to_string(), serde_json::from_str(v).expect("default literals are JSON")))
            .collect();
        ConfigBuilder { values }
    }

    pub fn set(&mut self, key: &str, value: Value) -> Result<(), ConfigError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(ConfigError::new(key, "unknown key")),
        }
    }

    /// Applies `key=value`; the value is read as JSON when it parses,
    /// otherwise as a plain string.
    pub fn set_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::new(assignment, "override must look like key=value"))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        self.set(key.trim(), value)
    }

    pub fn merge_json(&mut self, text: &str) -> Result<(), ConfigError> {
        let parsed: Value = serde_json::from_str(text).map_err(|e| ConfigError::new("<file>", e.to_string()))?;
        let Value::Object(map) = parsed else {
            return Err(ConfigError::new("<file>", "top level must be an object"));
        };
        for (k, v) in map {
            self.set(&k, v)?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = read_text(path)?;
        self.merge_json(&text).map_err(Error::from)
    }

    fn value(&self, key: &str) -> &Value {
        &self.values[key]
    }

    fn uint(&self, key: &str) -> Result<u64, ConfigError> {
        self.value(key).as_u64().ok_or_else(|| ConfigError::new(key, "expected a non-negative integer"))
    }

    fn count(&self, key: &str) -> Result<usize, ConfigError> {
        match self.uint(key)? {
            0 => Err(ConfigError::new(key, "must be positive")),
            n => usize::try_from(n).map_err(|_| ConfigError::new(key, "too large")),
        }
    }

    fn count_u32(&self, key: &str) -> Result<u32, ConfigError> {
        u32::try_from(self.count(key)?).map_err(|_| ConfigError::new(key, "too large"))
    }

    fn real(&self, key: &str) -> Result<f64, ConfigError> {
        self.value(key)
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| ConfigError::new(key, "expected a finite number"))
    }

    fn opt_real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.value(key) {
            Value::Null => Ok(None),
            _ => self.real(key).map(Some),
        }
    }

    fn flag(&self, key: &str) -> Result<bool, ConfigError> {
        self.value(key).as_bool().ok_or_else(|| ConfigError::new(key, "expected true or false"))
    }

    fn text(&self, key: &str) -> Result<&str, ConfigError> {
        self.value(key).as_str().ok_or_else(|| ConfigError::new(key, "expected a string"))
    }

    fn opt_path(&self, key: &str) -> Result<Option<PathBuf>, ConfigError> {
        match self.value(key) {
            Value::Null => Ok(None),
            _ => self.text(key).map(|s| Some(PathBuf::from(s))),
        }
    }

    pub fn build(&self) -> Result<PipelineConfig, ConfigError> {
        let url = match self.text("backend.url")? {
            "mock" => None,
            u if u.starts_with("http://") || u.starts_with("https://") => Some(u.to_string()),
            _ => return Err(ConfigError::new("backend.url", "expected \"mock\" or an http(s) URL")),
        };
        let generation = GenerationConfig {
            k_p: self.count("generation.k_p")?,
            k_beam: self.count_u32("generation.k_beam")?,
            k_sent: self.count_u32("generation.k_sent")?,
            max_fill_tokens: self.count_u32("generation.max_fill_tokens")?,
        };
        generation.validate().map_err(|e| ConfigError::new("generation.k_sent", e.to_string()))?;
        let f_plus = FPlus::parse(self.text("selector.f_plus")?)
            .ok_or_else(|| ConfigError::new("selector.f_plus", "expected \"exp\" or \"square\""))?;
        let seed = self.uint("seed")?;
        let train = SelectorTrainConfig {
            learning_rate: self.real("selector.learning_rate")?,
            repetition: self.count_u32("selector.repetition")?,
            patience: self.count_u32("selector.patience")?,
            max_epochs: self.count_u32("selector.max_epochs")?,
            batch_size: self.count("selector.batch_size")?,
            weight_decay: self.real("selector.weight_decay")?,
            seed,
        };
        train.validate().map_err(|e| ConfigError::new("selector.learning_rate", e.to_string()))?;
        let audit_epsilon = self.real("audit.epsilon")?;
        if !(audit_epsilon > 0.0 && audit_epsilon < 1.0) {
            return Err(ConfigError::new("audit.epsilon", "must lie strictly between 0 and 1"));
        }
        Ok(PipelineConfig {
            seed,
            backend: BackendSettings {
                url,
                timeout: Duration::from_millis(self.count("backend.timeout_ms")? as u64),
                in_flight: self.count("backend.in_flight")?,
                embed_dim: self.count("backend.embed_dim")?,
            },
            lexicon_path: self.opt_path("lexicon.path")?,
            generation,
            k_edge: self.count("selector.k_edge")?,
            head_dims: HeadDims {
                d_v: self.count("backend.embed_dim")?,
                d_c: self.count("selector.d_c")?,
                hidden: self.count("selector.hidden")?,
            },
            f_plus,
            checkpoint: self.opt_path("selector.checkpoint")?,
            shards: self.count("selector.shards")?,
            train,
            k_nbr: self.count("augment.k_nbr")?,
            strategies: Strategies {
                relaxed_match: self.flag("eval.relaxed_match")?,
                lemma_backup: self.flag("eval.lemma_backup")?,
                average_backup: self.flag("eval.average_backup")?,
            },
            precision_floor: self.opt_real("eval.precision_floor")?,
            audit_epsilon,
            audit_trials: self.count("audit.trials")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_scale() {
        let c = PipelineConfig::default();
        assert_eq!(c.generation, GenerationConfig { k_p: 5000, k_beam: 50, k_sent: 50, max_fill_tokens: 5 });
        assert_eq!(c.k_edge, 20_000_000);
        assert_eq!(c.head_dims, HeadDims { d_v: 768, d_c: 16, hidden: 16 });
        assert_eq!(c.backend.url, None);
        assert_eq!(c.train.learning_rate, 5e-4);
        assert_eq!(c.k_nbr, 5);
    }

    #[test]
    fn file_then_overrides() {
        let mut b = ConfigBuilder::new();
        b.merge_json(r#"{"generation.k_p": 40, "selector.f_plus": "square"}"#).unwrap();
        b.set_override("generation.k_p=12").unwrap();
        b.set_override("backend.url=http://localhost:9000").unwrap();
        let c = b.build().unwrap();
        assert_eq!(c.generation.k_p, 12);
        assert_eq!(c.f_plus, FPlus::Square);
        assert_eq!(c.backend.url.as_deref(), Some("http://localhost:9000"));
    }

    #[test]
    fn errors_name_the_key() {
        let mut b = ConfigBuilder::new();
        b.set_override("selector.f_plus=cube").unwrap();
        assert_eq!(b.build().unwrap_err().key, "selector.f_plus");
        assert_eq!(ConfigBuilder::new().set_override("nope=1").unwrap_err().key, "nope");
        let mut b = ConfigBuilder::new();
        b.set_override("generation.k_p=0").unwrap();
        assert_eq!(b.build().unwrap_err().key, "generation.k_p");
        let mut b = ConfigBuilder::new();
        b.set_override("eval.lemma_backup=yes").unwrap();
        assert_eq!(b.build().unwrap_err().key, "eval.lemma_backup");
        assert!(ConfigBuilder::new().merge_json("[1]").is_err());
    }
}
