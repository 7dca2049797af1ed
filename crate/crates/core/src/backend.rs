//! Inference backend abstraction: sequence generation, sentence embedding
//! and entailment scoring, plus a deterministic offline mock.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::surface::normalize_sentence;

/// Literal placeholder the backend replaces with its model's mask token.
pub const FILL_MARKER: &str = "<FILL>";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("backend unreachable: {0}")]
    Unreachable(String),
    #[error("backend schema violation: {0}")]
    SchemaViolation(String),
}

/// A validated generation request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenRequest {
    prompt: String,
    beam: u32,
    num_return: u32,
    max_fill_tokens: u32,
}

impl GenRequest {
    pub fn new(
        prompt: impl Into<String>,
        beam: u32,
        num_return: u32,
        max_fill_tokens: u32,
    ) -> Result<Self, BackendError> {
        let prompt = prompt.into();
        if num_return == 0 || beam == 0 {
            return Err(BackendError::SchemaViolation("beam and num_return must be positive".into()));
        }
        if num_return > beam {
            return Err(BackendError::SchemaViolation(format!("num_return {num_return} exceeds beam {beam}")));
        }
        if max_fill_tokens == 0 {
            return Err(BackendError::SchemaViolation("max_fill_tokens must be positive".into()));
        }
        if prompt.matches(FILL_MARKER).count() != 1 {
            return Err(BackendError::SchemaViolation(format!("prompt must contain exactly one {FILL_MARKER} marker")));
        }
        Ok(GenRequest { prompt, beam, num_return, max_fill_tokens })
    }

    pub fn prompt(&self) -> &str {
        &self.prompt
    }

    pub fn beam(&self) -> u32 {
        self.beam
    }

    pub fn num_return(&self) -> u32 {
        self.num_return
    }

    pub fn max_fill_tokens(&self) -> u32 {
        self.max_fill_tokens
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenResponse {
    pub sequences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedResponse {
    pub vector: Vec<f64>,
}

/// Entailment, neutral and contradiction logits, in that order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreResponse {
    pub logits: [f64; 3],
}

/// Checks a raw generation reply against its request. Sequences longer than
/// the token cap are truncated and logged rather than rejected.
pub fn validate_generation(req: &GenRequest, sequences: Vec<String>) -> Result<GenResponse, BackendError> {
    if sequences.len() > req.num_return as usize {
        return Err(BackendError::SchemaViolation(format!(
            "{} sequences returned for num_return {}",
            sequences.len(),
            req.num_return
        )));
    }
    let cap = req.max_fill_tokens as usize;
    let sequences = sequences
        .into_iter()
        .map(|s| {
            let tokens: Vec<&str> = s.split_whitespace().collect();
            if tokens.len() > cap {
                log::warn!("truncating overlong fill {:?} to {} tokens", s, cap);
                tokens[..cap].join(" ")
            } else {
                s
            }
        })
        .collect();
    Ok(GenResponse { sequences })
}

pub fn validate_embedding(vector: Vec<f64>, dim: usize) -> Result<EmbedResponse, BackendError> {
    if vector.len() != dim {
        return Err(BackendError::SchemaViolation(format!(
            "embedding has {} components, expected {dim}",
            vector.len()
        )));
    }
    if vector.iter().any(|x| !x.is_finite()) {
        return Err(BackendError::SchemaViolation("embedding has non-finite components".into()));
    }
    Ok(EmbedResponse { vector })
}

pub fn validate_logits(values: &[f64]) -> Result<ScoreResponse, BackendError> {
    let [e, n, c] = values else {
        return Err(BackendError::SchemaViolation(format!("expected 3 logits, got {}", values.len())));
    };
    if !(e.is_finite() && n.is_finite() && c.is_finite()) {
        return Err(BackendError::SchemaViolation("non-finite logits".into()));
    }
    Ok(ScoreResponse { logits: [*e, *n, *c] })
}

/// The three inference capabilities. Batch methods return one result per
/// input, in input order; the defaults call the single-item methods in turn.
pub trait Backend {
    fn generate(&self, req: &GenRequest) -> Result<GenResponse, BackendError>;
    fn embed(&self, sentence: &str) -> Result<EmbedResponse, BackendError>;
    fn score(&self, premise: &str, hypothesis: &str) -> Result<ScoreResponse, BackendError>;
    fn embed_dim(&self) -> usize;

    fn generate_batch(&self, reqs: &[GenRequest]) -> Vec<Result<GenResponse, BackendError>> {
        reqs.iter().map(|r| self.generate(r)).collect()
    }

    fn embed_batch(&self, sentences: &[String]) -> Vec<Result<EmbedResponse, BackendError>> {
        sentences.iter().map(|s| self.embed(s)).collect()
    }

    fn score_batch(&self, pairs: &[(String, String)]) -> Vec<Result<ScoreResponse, BackendError>> {
        pairs.iter().map(|(p, h)| self.score(p, h)).collect()
    }
}

impl<B: Backend + ?Sized> Backend for &B {
    fn generate(&self, req: &GenRequest) -> Result<GenResponse, BackendError> {
        (**self).generate(req)
    }
    fn embed(&self, sentence: &str) -> Result<EmbedResponse, BackendError> {
        (**self).embed(sentence)
    }
    fn score(&self, premise: &str, hypothesis: &str) -> Result<ScoreResponse, BackendError> {
        (**self).score(premise, hypothesis)
    }
    fn embed_dim(&self) -> usize {
        (**self).embed_dim()
    }
    fn generate_batch(&self, reqs: &[GenRequest]) -> Vec<Result<GenResponse, BackendError>> {
        (**self).generate_batch(reqs)
    }
    fn embed_batch(&self, sentences: &[String]) -> Vec<Result<EmbedResponse, BackendError>> {
        (**self).embed_batch(sentences)
    }
    fn score_batch(&self, pairs: &[(String, String)]) -> Vec<Result<ScoreResponse, BackendError>> {
        (**self).score_batch(pairs)
    }
}

/// Fill phrases the mock chooses from. Includes one phrase the resolver
/// rejects so that dropped outputs are exercised too.
pub const MOCK_PHRASES: [&str; 20] = [
    "is connected with",
    "recognizes",
    "is drawn to",
    "is associated with",
    "identifies with",
    "adores",
    "knows",
    "is identified with",
    "supports",
    "is magnet for",
    "opposes",
    "is devoted to",
    "believes in",
    "trusts",
    "is loyal to",
    "criticizes",
    "admires",
    "is close to",
    "depends on",
    "xyzzy plugh",
];

/// Deterministic stand-in for a model server: every output is a pure
/// function of the seed and the request.
#[derive(Debug, Clone)]
pub struct MockBackend {
    seed: u64,
    dim: usize,
}

impl MockBackend {
    pub fn new(seed: u64, dim: usize) -> Self {
        MockBackend { seed, dim }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn rng(&self, tag: &str, text: &str) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(tag.as_bytes());
        h.update([0u8]);
        h.update(text.as_bytes());
        let digest = h.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }

    fn hash_vector(&self, tag: &str, text: &str, scale: f64, acc: &mut [f64]) {
        let mut rng = self.rng(tag, text);
        for x in acc.iter_mut() {
            *x += scale * rng.random_range(-1.0..1.0);
        }
    }
}

impl Backend for MockBackend {
    fn generate(&self, req: &GenRequest) -> Result<GenResponse, BackendError> {
        let mut rng = self.rng("generate", req.prompt());
        let mut pool: Vec<&str> = MOCK_PHRASES.to_vec();
        let most = pool.len().min(req.num_return() as usize);
        let count = rng.random_range(1..=most);
        // partial Fisher-Yates: the first `count` entries become the sample
        for i in 0..count {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        let sequences = pool[..count].iter().map(|s| s.to_string()).collect();
        validate_generation(req, sequences)
    }

    fn embed(&self, sentence: &str) -> Result<EmbedResponse, BackendError> {
        let norm = normalize_sentence(sentence);
        if norm.is_empty() {
            return Err(BackendError::SchemaViolation("empty sentence".into()));
        }
        let mut v = alloc::vec![0.0; self.dim];
        for token in norm.split(' ') {
            self.hash_vector("token", &token.to_lowercase(), 1.0, &mut v);
        }
        self.hash_vector("sentence", &norm, 0.5, &mut v);
        let len = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        if len > 0.0 {
            v.iter_mut().for_each(|x| *x /= len);
        }
        validate_embedding(v, self.dim)
    }

    fn score(&self, premise: &str, hypothesis: &str) -> Result<ScoreResponse, BackendError> {
        let (p, h) = (normalize_sentence(premise), normalize_sentence(hypothesis));
        if p.is_empty() || h.is_empty() {
            return Err(BackendError::SchemaViolation("empty sentence".into()));
        }
        if p == h {
            return Ok(ScoreResponse { logits: [5.0, 0.0, -1.0] });
        }
        let (vp, vh) = (self.embed(&p)?.vector, self.embed(&h)?.vector);
        let cos: f64 = vp.iter().zip(&vh).map(|(a, b)| a * b).sum();
        let mut rng = self.rng("score", &format!("{p}\u{0}{h}"));
        let mut noise = || rng.random_range(-0.5..0.5);
        let logits = [3.0 * cos - 0.5 + noise(), 0.5 - cos + noise(), -cos + noise()];
        validate_logits(&logits)
    }

    fn embed_dim(&self) -> usize {
        self.dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PROMPT: &str = "Person A adores Government B, which entails that Person A <FILL> Government B.";

    #[test]
    fn request_validation() {
        assert!(GenRequest::new(PROMPT, 50, 50, 5).is_ok());
        assert!(matches!(GenRequest::new(PROMPT, 50, 0, 5), Err(BackendError::SchemaViolation(_))));
        assert!(GenRequest::new(PROMPT, 8, 9, 5).is_err());
        assert!(GenRequest::new(PROMPT, 8, 8, 0).is_err());
        assert!(GenRequest::new("no marker", 8, 8, 5).is_err());
        assert!(GenRequest::new("<FILL> <FILL>", 8, 8, 5).is_err());
    }

    #[test]
    fn overlong_fills_are_truncated() {
        let req = GenRequest::new(PROMPT, 4, 2, 2).unwrap();
        let out = validate_generation(&req, alloc::vec!["a b c".into(), "d".into()]).unwrap();
        assert_eq!(out.sequences, ["a b", "d"]);
        assert!(validate_generation(&req, alloc::vec!["a".into(); 3]).is_err());
    }

    #[test]
    fn schema_checks() {
        assert!(validate_embedding(alloc::vec![0.0; 767], 768).is_err());
        assert!(validate_embedding(alloc::vec![f64::NAN; 2], 2).is_err());
        assert!(validate_logits(&[1.0, 2.0]).is_err());
        assert!(validate_logits(&[1.0, f64::INFINITY, 0.0]).is_err());
        assert_eq!(validate_logits(&[1.0, 2.0, 3.0]).unwrap().logits, [1.0, 2.0, 3.0]);
    }

    #[test]
    fn mock_is_deterministic() {
        let m = MockBackend::new(7, 32);
        let req = GenRequest::new(PROMPT, 8, 8, 5).unwrap();
        let a = m.generate(&req).unwrap();
        assert_eq!(a, m.generate(&req).unwrap());
        assert!(!a.sequences.is_empty() && a.sequences.len() <= 8);
        assert_eq!(a, MockBackend::new(7, 32).generate(&req).unwrap());
        let s = "Person A adores Government B";
        assert_eq!(m.embed(s).unwrap(), m.embed(s).unwrap());
        assert_ne!(m.embed(s).unwrap(), MockBackend::new(8, 32).embed(s).unwrap());
        assert_ne!(m.embed(s).unwrap(), m.embed("Person A knows Government B").unwrap());
    }

    #[test]
    fn mock_embeddings_are_unit_norm() {
        let m = MockBackend::new(7, 768);
        let v = m.embed("Person A adores Government B").unwrap().vector;
        assert_eq!(v.len(), 768);
        let n: f64 = v.iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-12);
        assert!(m.embed("  ").is_err());
    }

    #[test]
    fn mock_favors_entailment_on_identical_sentences() {
        let m = MockBackend::new(7, 64);
        let s = "Person A adores Government B";
        let l = m.score(s, s).unwrap().logits;
        assert!(l[0] > l[1] && l[0] > l[2]);
        let other = m.score(s, "Person A knows Government B").unwrap();
        assert!(other.logits.iter().all(|x| x.is_finite()));
        assert_eq!(other, m.score(s, "Person A knows Government B").unwrap());
    }

    #[test]
    fn batch_matches_sequential() {
        let m = MockBackend::new(3, 16);
        let sentences: Vec<String> = ["a b", "c d", "a b"].iter().map(|s| s.to_string()).collect();
        let batched = m.embed_batch(&sentences);
        for (s, b) in sentences.iter().zip(batched) {
            assert_eq!(b.unwrap(), m.embed(s).unwrap());
        }
    }
}
