//! Chat completion backends.

use super::{LlmError, LlmRequest};

/// A synchronous chat completion provider.
pub trait ChatBackend: Send + Sync {
    /// Stable identifier recorded alongside cached responses.
    fn id(&self) -> String;
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError>;
}

/// Deterministic backend driven by a response function; used for tests
/// and for building replay fixtures.
pub struct ScriptedBackend {
    id: String,
    script: Box<dyn Fn(&LlmRequest) -> Option<String> + Send + Sync>,
}

impl ScriptedBackend {
    pub fn new<F>(id: &str, script: F) -> Self
    where
        F: Fn(&LlmRequest) -> Option<String> + Send + Sync + 'static,
    {
        ScriptedBackend {
            id: id.to_string(),
            script: Box::new(script),
        }
    }
}

impl ChatBackend for ScriptedBackend {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        (self.script)(request).ok_or_else(|| {
            LlmError::Backend(format!(
                "no scripted response for sample {} of model {}",
                request.sample_index, request.model
            ))
        })
    }
}

#[cfg(feature = "http")]
pub use http::HttpBackend;

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use serde::Deserialize;
    use serde_json::json;

    use super::{ChatBackend, LlmError, LlmRequest};

    /// Environment variable holding the chat completions endpoint base,
    /// e.g. `https://api.example.com/v1`.
    pub const BASE_URL_VAR: &str = "ARMETRIC_BASE_URL";
    /// Environment variable holding the bearer token, if the endpoint
    /// needs one.
    pub const API_KEY_VAR: &str = "ARMETRIC_API_KEY";

    const MAX_ATTEMPTS: u32 = 4;

    /// Client for OpenAI-style `/chat/completions` endpoints, with
    /// exponential backoff on transport errors and retryable statuses.
    pub struct HttpBackend {
        client: reqwest::blocking::Client,
        base_url: String,
        api_key: Option<String>,
    }

    impl HttpBackend {
        pub fn new(base_url: &str, api_key: Option<String>) -> Result<Self, LlmError> {
            let client = reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(120))
                .build()
                .map_err(|e| LlmError::Backend(format!("http client: {e}")))?;
            Ok(HttpBackend {
                client,
                base_url: base_url.trim_end_matches('/').to_string(),
                api_key,
            })
        }

        /// Reads endpoint configuration from the environment.
        pub fn from_env() -> Result<Self, LlmError> {
            let base_url = std::env::var(BASE_URL_VAR).map_err(|_| {
                LlmError::Backend(format!("{BASE_URL_VAR} is not set; required for live mode"))
            })?;
            let api_key = std::env::var(API_KEY_VAR).ok();
            Self::new(&base_url, api_key)
        }

        fn attempt(&self, request: &LlmRequest) -> Result<String, AttemptError> {
            let mut messages = Vec::new();
            if !request.system.is_empty() {
                messages.push(json!({"role": "system", "content": request.system}));
            }
            messages.push(json!({"role": "user", "content": request.user}));
            let body = json!({
                "model": request.model,
                "messages": messages,
                "temperature": request.temperature,
                "max_tokens": request.max_tokens,
            });
            let url = format!("{}/chat/completions", self.base_url);
            let mut req = self.client.post(&url).json(&body);
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            let resp = req.send().map_err(|e| AttemptError::Retryable(e.to_string()))?;
            let status = resp.status();
            let text = resp
                .text()
                .map_err(|e| AttemptError::Retryable(e.to_string()))?;
            if status.is_server_error() || status.as_u16() == 429 {
                return Err(AttemptError::Retryable(format!("status {status}: {text}")));
            }
            if !status.is_success() {
                return Err(AttemptError::Fatal(format!("status {status}: {text}")));
            }
            let parsed: ChatResponse = serde_json::from_str(&text)
                .map_err(|e| AttemptError::Fatal(format!("bad response body: {e}")))?;
            parsed
                .choices
                .into_iter()
                .next()
                .map(|c| c.message.content)
                .ok_or_else(|| AttemptError::Fatal("response had no choices".to_string()))
        }
    }

    enum AttemptError {
        Retryable(String),
        Fatal(String),
    }

    #[derive(Deserialize)]
    struct ChatResponse {
        choices: Vec<Choice>,
    }

    #[derive(Deserialize)]
    struct Choice {
        message: Message,
    }

    #[derive(Deserialize)]
    struct Message {
        content: String,
    }

    impl ChatBackend for HttpBackend {
        fn id(&self) -> String {
            format!("http:{}", self.base_url)
        }

        fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
            let mut backoff = Duration::from_millis(500);
            let mut last = String::new();
            for attempt in 0..MAX_ATTEMPTS {
                match self.attempt(request) {
                    Ok(content) => return Ok(content),
                    Err(AttemptError::Fatal(message)) => {
                        return Err(LlmError::Backend(message));
                    }
                    Err(AttemptError::Retryable(message)) => {
                        last = message;
                        if attempt + 1 < MAX_ATTEMPTS {
                            std::thread::sleep(backoff);
                            backoff *= 2;
                        }
                    }
                }
            }
            Err(LlmError::Backend(format!(
                "gave up after {MAX_ATTEMPTS} attempts: {last}"
            )))
        }
    }
}
