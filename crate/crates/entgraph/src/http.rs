//! JSON-over-HTTP model backend and a small server for hosting handlers
//! such as the mock backend.
//!
//! Endpoints take POST bodies:
//! `/generate {"prompt","beam","num_return","max_fill_tokens"} -> {"sequences"}`,
//! `/embed {"sentence"} -> {"vector"}`,
//! `/score {"premise","hypothesis"} -> {"logits": [e, n, c]}`.
//! Every request carries an `X-Correlation-Id` header; a server that echoes
//! it must echo the same value.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use entgraph_core::backend::{validate_embedding, validate_generation, validate_logits};
use entgraph_core::{Backend, BackendError, EmbedResponse, GenRequest, GenResponse, MockBackend, ScoreResponse};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const CORRELATION_HEADER: &str = "X-Correlation-Id";

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    pub base_url: String,
    pub timeout: Duration,
    /// Upper bound on concurrent requests issued by one batch call.
    pub in_flight: usize,
    pub embed_dim: usize,
}

#[derive(Serialize, Deserialize)]
struct GenerateBody {
    prompt: String,
    beam: u32,
    num_return: u32,
    max_fill_tokens: u32,
}

#[derive(Serialize, Deserialize)]
struct EmbedBody {
    sentence: String,
}

#[derive(Serialize, Deserialize)]
struct ScoreBody {
    premise: String,
    hypothesis: String,
}

#[derive(Serialize, Deserialize)]
struct SequencesReply {
    sequences: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct VectorReply {
    vector: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LogitsReply {
    logits: Vec<f64>,
}

pub struct HttpBackend {
    agent: ureq::Agent,
    base_url: String,
    in_flight: usize,
    embed_dim: usize,
    next_id: AtomicU64,
}

impl HttpBackend {
    pub fn new(cfg: &HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        HttpBackend {
            agent,
            base_url: cfg.base_url.trim_end_matches('/').to_string(),
            in_flight: cfg.in_flight.max(1),
            embed_dim: cfg.embed_dim,
            next_id: AtomicU64::new(1),
        }
    }

    fn post<B: Serialize, R: DeserializeOwned>(&self, endpoint: &str, body: &B) -> Result<R, BackendError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed).to_string();
        let url = format!("{}{endpoint}", self.base_url);
        let mut resp = self
            .agent
            .post(&url)
            .header(CORRELATION_HEADER, &id)
            .send_json(body)
            .map_err(|e| BackendError::Unreachable(format!("{url}: {e}")))?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(BackendError::Unreachable(format!("{url}: status {status}")));
        }
        if let Some(echo) = resp.headers().get(CORRELATION_HEADER) {
            if echo.as_bytes() != id.as_bytes() {
                return Err(BackendError::SchemaViolation(format!("{url}: correlation id mismatch")));
            }
        }
        let text = resp.body_mut().read_to_string().map_err(|e| BackendError::Unreachable(format!("{url}: {e}")))?;
        serde_json::from_str(&text).map_err(|e| BackendError::SchemaViolation(format!("{url}: {e}")))
    }

    /// Applies `f` to every item with at most `in_flight` calls running,
    /// returning results in input order.
    fn ordered<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
        let workers = self.in_flight.min(items.len());
        if workers <= 1 {
            return items.iter().map(f).collect();
        }
        let next = AtomicUsize::new(0);
        let mut slots: Vec<Option<R>> = std::iter::repeat_with(|| None).take(items.len()).collect();
        let done: Vec<Vec<(usize, R)>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    s.spawn(|| {
                        let mut mine = Vec::new();
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            if i >= items.len() {
                                break mine;
                            }
                            mine.push((i, f(&items[i])));
                        }
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("backend worker panicked")).collect()
        });
        for (i, r) in done.into_iter().flatten() {
            slots[i] = Some(r);
        }
        slots.into_iter().map(|r| r.expect("every index is claimed once")).collect()
    }
}

impl Backend for HttpBackend {
    fn generate(&self, req: &GenRequest) -> Result<GenResponse, BackendError> {
        let body = GenerateBody {
            prompt: req.prompt().to_string(),
            beam: req.beam(),
            num_return: req.num_return(),
            max_fill_tokens: req.max_fill_tokens(),
        };
        let reply: SequencesReply = self.post("/generate", &body)?;
        validate_generation(req, reply.sequences)
    }

    fn embed(&self, sentence: &str) -> Result<EmbedResponse, BackendError> {
        let reply: VectorReply = self.post("/embed", &EmbedBody { sentence: sentence.to_string() })?;
        validate_embedding(reply.vector, self.embed_dim)
    }

    fn score(&self, premise: &str, hypothesis: &str) -> Result<ScoreResponse, BackendError> {
        let body = ScoreBody { premise: premise.to_string(), hypothesis: hypothesis.to_string() };
        let reply: LogitsReply = self.post("/score", &body)?;
        validate_logits(&reply.logits)
    }

    fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    fn generate_batch(&self, reqs: &[GenRequest]) -> Vec<Result<GenResponse, BackendError>> {
        self.ordered(reqs, |r| self.generate(r))
    }

    fn embed_batch(&self, sentences: &[String]) -> Vec<Result<EmbedResponse, BackendError>> {
        self.ordered(sentences, |s| self.embed(s))
    }

    fn score_batch(&self, pairs: &[(String, String)]) -> Vec<Result<ScoreResponse, BackendError>> {
        self.ordered(pairs, |(p, h)| self.score(p, h))
    }
}

/// Maps (method, path, body) to (status, JSON body).
pub type Handler = dyn Fn(&str, &str, &str) -> (u16, String) + Send + Sync;

/// Background HTTP server dispatching every request to a handler. The
/// correlation header is echoed back unchanged.
pub struct StubServer {
    server: Arc<tiny_http::Server>,
    addr: SocketAddr,
    workers: Vec<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(addr: &str, workers: usize, handler: Arc<Handler>) -> std::io::Result<Self> {
        let server = tiny_http::Server::http(addr).map_err(std::io::Error::other)?;
        let server = Arc::new(server);
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("server is not bound to an IP address"))?;
        let workers = (0..workers.max(1))
            .map(|_| {
                let server = Arc::clone(&server);
                let handler = Arc::clone(&handler);
                std::thread::spawn(move || {
                    while let Ok(req) = server.recv() {
                        respond(req, handler.as_ref());
                    }
                })
            })
            .collect();
        Ok(StubServer { server, addr, workers })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the server stops.
    pub fn join(mut self) {
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        for _ in 0..self.workers.len() {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

fn respond(mut req: tiny_http::Request, handler: &Handler) {
    let mut body = String::new();
    let (status, reply) = match req.as_reader().read_to_string(&mut body) {
        Ok(_) => handler(req.method().as_str(), req.url(), &body),
        Err(_) => (400, error_json("body is not UTF-8")),
    };
    let json = tiny_http::Header::from_bytes("Content-Type", "application/json").expect("static header");
    let mut response = tiny_http::Response::from_string(reply).with_status_code(status).with_header(json);
    let echo = req.headers().iter().find(|h| h.field.equiv(CORRELATION_HEADER)).cloned();
    if let Some(h) = echo {
        response = response.with_header(h);
    }
    if let Err(e) = req.respond(response) {
        log::warn!("failed to send response: {e}");
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

fn parse_body<T: DeserializeOwned>(body: &str) -> Result<T, (u16, String)> {
    serde_json::from_str(body).map_err(|e| (400, error_json(&e.to_string())))
}

fn reply<T: Serialize>(value: &T) -> (u16, String) {
    (200, serde_json::to_string(value).expect("replies serialize"))
}

/// Serves the wire protocol from a [`MockBackend`], plus `GET /healthz`.
pub fn mock_handler(mock: MockBackend) -> Arc<Handler> {
    Arc::new(move |method, path, body| {
        let result = match (method, path) {
            ("GET", "/healthz") => Ok(reply(&serde_json::json!({ "status": "ok", "embed_dim": mock.embed_dim() }))),
            ("POST", "/generate") => parse_body::<GenerateBody>(body).and_then(|b| {
                let req = GenRequest::new(b.prompt, b.beam, b.num_return, b.max_fill_tokens)
                    .map_err(|e| (400, error_json(&e.to_string())))?;
                let out = mock.generate(&req).map_err(|e| (500, error_json(&e.to_string())))?;
                Ok(reply(&SequencesReply { sequences: out.sequences }))
            }),
            ("POST", "/embed") => parse_body::<EmbedBody>(body).and_then(|b| {
                let out = mock.embed(&b.sentence).map_err(|e| (400, error_json(&e.to_string())))?;
                Ok(reply(&VectorReply { vector: out.vector }))
            }),
            ("POST", "/score") => parse_body::<ScoreBody>(body).and_then(|b| {
                let out = mock.score(&b.premise, &b.hypothesis).map_err(|e| (400, error_json(&e.to_string())))?;
                Ok(reply(&LogitsReply { logits: out.logits.to_vec() }))
            }),
            _ => Err((404, error_json("no such endpoint"))),
        };
        result.unwrap_or_else(|e| e)
    })
}
