//! Prompt rendering, chat backends and the record/replay cache.
//!
//! Every completion request is content-addressed by a digest of its
//! semantic fields. In record mode responses are persisted before they are
//! returned; in replay mode the cache is the only source and a miss is an
//! error, which keeps evaluation runs reproducible and offline.

mod backend;
mod cache;
mod extract;
mod template;

pub use backend::{ChatBackend, ScriptedBackend};
#[cfg(feature = "http")]
pub use backend::HttpBackend;
pub use cache::{CachedEntry, ReplayCache};
pub use extract::{extract_tagged, parse_yes_no, Arity, ExtractError};
pub use template::{PromptTemplate, RenderedPrompt, TemplateError, TemplateSet};

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Offset added to `sample_index` for the re-ask after an extraction
/// failure, so retries get their own cache entries.
pub const RETRY_SAMPLE_OFFSET: u32 = 100;

pub const DEFAULT_MAX_TOKENS: u32 = 1024;

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("backend error: {0}")]
    Backend(String),
    #[error("no backend configured for {0} mode")]
    NoBackend(&'static str),
    #[error("replay cache miss for request {digest} (model {model})")]
    CacheMiss { digest: String, model: String },
    #[error("cache error: {0}")]
    Cache(String),
}

/// One chat completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub model: String,
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Distinguishes repeated samples of the same prompt.
    pub sample_index: u32,
}

impl LlmRequest {
    pub fn new(model: &str, prompt: &RenderedPrompt) -> Self {
        LlmRequest {
            model: model.to_string(),
            system: prompt.system.clone(),
            user: prompt.user.clone(),
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
            sample_index: 0,
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_sample_index(mut self, sample_index: u32) -> Self {
        self.sample_index = sample_index;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub raw_text: String,
    pub cached: bool,
    pub backend_id: String,
}

#[derive(Serialize)]
struct DigestKey<'a> {
    model: &'a str,
    system: &'a str,
    user: &'a str,
    temperature: f64,
    sample_index: u32,
}

/// Content address of a request: sha256 over the fields that determine
/// the response distribution. `max_tokens` is deliberately excluded.
pub fn request_digest(req: &LlmRequest) -> String {
    let key = DigestKey {
        model: &req.model,
        system: &req.system,
        user: &req.user,
        temperature: req.temperature,
        sample_index: req.sample_index,
    };
    let canonical = serde_json::to_string(&key).expect("digest key serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GatewayMode {
    Live,
    Record,
    Replay,
}

impl GatewayMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            GatewayMode::Live => "live",
            GatewayMode::Record => "record",
            GatewayMode::Replay => "replay",
        }
    }
}

/// Routes completion requests to a backend, a cache, or both.
pub struct LlmGateway {
    mode: GatewayMode,
    backend: Option<Arc<dyn ChatBackend>>,
    cache: Option<ReplayCache>,
}

impl LlmGateway {
    pub fn live(backend: Arc<dyn ChatBackend>) -> Self {
        LlmGateway {
            mode: GatewayMode::Live,
            backend: Some(backend),
            cache: None,
        }
    }

    /// Record mode reuses cached responses and persists new ones before
    /// returning them.
    pub fn record(backend: Arc<dyn ChatBackend>, cache: ReplayCache) -> Self {
        LlmGateway {
            mode: GatewayMode::Record,
            backend: Some(backend),
            cache: Some(cache),
        }
    }

    /// Replay mode never touches a backend.
    pub fn replay(cache: ReplayCache) -> Self {
        LlmGateway {
            mode: GatewayMode::Replay,
            backend: None,
            cache: Some(cache),
        }
    }

    pub fn mode(&self) -> GatewayMode {
        self.mode
    }

    pub fn cache(&self) -> Option<&ReplayCache> {
        self.cache.as_ref()
    }

    pub fn complete(&self, req: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let digest = request_digest(req);
        match self.mode {
            GatewayMode::Live => {
                let backend = self
                    .backend
                    .as_ref()
                    .ok_or(LlmError::NoBackend("live"))?;
                let raw_text = backend.complete(req)?;
                Ok(LlmResponse {
                    raw_text,
                    cached: false,
                    backend_id: backend.id(),
                })
            }
            GatewayMode::Record => {
                let cache = self
                    .cache
                    .as_ref()
                    .ok_or_else(|| LlmError::Cache("record mode needs a cache".into()))?;
                if let Some(entry) = cache.get(&digest)? {
                    return Ok(LlmResponse {
                        raw_text: entry.raw_text,
                        cached: true,
                        backend_id: entry.backend_id,
                    });
                }
                let backend = self
                    .backend
                    .as_ref()
                    .ok_or(LlmError::NoBackend("record"))?;
                let raw_text = backend.complete(req)?;
                cache.put(&digest, req, &raw_text, &backend.id())?;
                Ok(LlmResponse {
                    raw_text,
                    cached: false,
                    backend_id: backend.id(),
                })
            }
            GatewayMode::Replay => {
                let cache = self
                    .cache
                    .as_ref()
                    .ok_or_else(|| LlmError::Cache("replay mode needs a cache".into()))?;
                match cache.get(&digest)? {
                    Some(entry) => Ok(LlmResponse {
                        raw_text: entry.raw_text,
                        cached: true,
                        backend_id: entry.backend_id,
                    }),
                    None => Err(LlmError::CacheMiss {
                        digest,
                        model: req.model.clone(),
                    }),
                }
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CompletionError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("could not extract <{tag}> after {attempts} attempts")]
    ParseFailed {
        tag: String,
        attempts: usize,
        last_raw: String,
    },
}

/// A successful completion plus tag extraction.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub values: Vec<String>,
    pub raw_text: String,
    pub retried: bool,
}

/// Completes a request and extracts the tagged answer, re-asking once with
/// a shifted sample index if extraction fails. A second failure is a parse
/// failure for the caller to record.
pub fn complete_and_extract(
    gateway: &LlmGateway,
    req: &LlmRequest,
    tag: &str,
    arity: Arity,
) -> Result<Extraction, CompletionError> {
    let first = gateway.complete(req)?;
    match extract_tagged(&first.raw_text, tag, arity) {
        Ok(values) => {
            return Ok(Extraction {
                values,
                raw_text: first.raw_text,
                retried: false,
            })
        }
        Err(_) => {}
    }
    let retry_req = req
        .clone()
        .with_sample_index(req.sample_index + RETRY_SAMPLE_OFFSET);
    let second = gateway.complete(&retry_req)?;
    match extract_tagged(&second.raw_text, tag, arity) {
        Ok(values) => Ok(Extraction {
            values,
            raw_text: second.raw_text,
            retried: true,
        }),
        Err(_) => Err(CompletionError::ParseFailed {
            tag: tag.to_string(),
            attempts: 2,
            last_raw: second.raw_text,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(user: &str) -> LlmRequest {
        LlmRequest {
            model: "m".into(),
            system: "sys".into(),
            user: user.into(),
            temperature: 0.0,
            max_tokens: 64,
            sample_index: 0,
        }
    }

    #[test]
    fn digest_ignores_max_tokens_but_not_samples() {
        let a = req("hello");
        let mut b = a.clone();
        b.max_tokens = 9999;
        assert_eq!(request_digest(&a), request_digest(&b));
        let c = a.clone().with_sample_index(1);
        assert_ne!(request_digest(&a), request_digest(&c));
        let d = a.clone().with_temperature(0.7);
        assert_ne!(request_digest(&a), request_digest(&d));
    }

    #[test]
    fn record_then_replay_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let backend = Arc::new(ScriptedBackend::new("scripted", |r: &LlmRequest| {
            Some(format!("<answer>{}</answer>", r.user.len()))
        }));
        let cache = ReplayCache::open(dir.path()).unwrap();
        let gw = LlmGateway::record(backend, cache);
        let r = req("ping");
        let first = gw.complete(&r).unwrap();
        assert!(!first.cached);
        let again = gw.complete(&r).unwrap();
        assert!(again.cached);
        assert_eq!(first.raw_text, again.raw_text);

        let replay = LlmGateway::replay(ReplayCache::open(dir.path()).unwrap());
        let replayed = replay.complete(&r).unwrap();
        assert!(replayed.cached);
        assert_eq!(replayed.raw_text, first.raw_text);
        let miss = replay.complete(&req("other"));
        assert!(matches!(miss, Err(LlmError::CacheMiss { .. })));
    }

    #[test]
    fn extraction_retry_uses_shifted_sample_index() {
        let dir = tempfile::tempdir().unwrap();
        let backend = Arc::new(ScriptedBackend::new("scripted", |r: &LlmRequest| {
            if r.sample_index >= RETRY_SAMPLE_OFFSET {
                Some("<answer>ok</answer>".to_string())
            } else {
                Some("no tags here".to_string())
            }
        }));
        let gw = LlmGateway::record(backend, ReplayCache::open(dir.path()).unwrap());
        let out = complete_and_extract(&gw, &req("x"), "answer", Arity::ExactlyOne).unwrap();
        assert!(out.retried);
        assert_eq!(out.values, vec!["ok".to_string()]);
    }

    #[test]
    fn double_extraction_failure_is_parse_failed() {
        let backend = Arc::new(ScriptedBackend::new("scripted", |_: &LlmRequest| {
            Some("still no tags".to_string())
        }));
        let gw = LlmGateway::live(backend);
        let err = complete_and_extract(&gw, &req("x"), "answer", Arity::ExactlyOne).unwrap_err();
        match err {
            CompletionError::ParseFailed { attempts, .. } => assert_eq!(attempts, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
