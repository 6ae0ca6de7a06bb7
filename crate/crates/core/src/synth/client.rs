use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::sha256_hex;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("rate limited or over quota: {0}")]
    Quota(String),
    #[error("no recorded response for prompt {0}")]
    NoResponse(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for Decoding {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_tokens: 4096,
        }
    }
}

/// A chat-completion backend.
pub trait LlmClient: Send + Sync {
    fn complete(
        &self,
        system: &str,
        user: &str,
        decoding: &Decoding,
    ) -> Result<String, ClientError>;

    /// Model name recorded alongside outputs.
    fn identity(&self) -> &str;
}

/// Key under which replay files store a response.
pub fn prompt_digest(system: &str, user: &str) -> String {
    sha256_hex(&format!("{system}\n{user}"))
}

type Responder = dyn Fn(&str, &str) -> Result<String, ClientError> + Send + Sync;

/// Client driven by a closure over `(system, user)`.
pub struct ScriptedClient {
    name: String,
    respond: Box<Responder>,
}

impl ScriptedClient {
    pub fn new<F>(name: impl Into<String>, respond: F) -> Self
    where
        F: Fn(&str, &str) -> Result<String, ClientError> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            respond: Box::new(respond),
        }
    }
}

impl std::fmt::Debug for ScriptedClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScriptedClient")
            .field("name", &self.name)
            .finish()
    }
}

impl LlmClient for ScriptedClient {
    fn complete(&self, system: &str, user: &str, _: &Decoding) -> Result<String, ClientError> {
        (self.respond)(system, user)
    }

    fn identity(&self) -> &str {
        &self.name
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub prompt_digest: String,
    pub response: String,
}

/// Answers from recorded responses keyed by [`prompt_digest`].
#[derive(Debug, Clone, Default)]
pub struct ReplayClient {
    name: String,
    responses: HashMap<String, String>,
}

impl ReplayClient {
    pub fn new(name: impl Into<String>, entries: impl IntoIterator<Item = ReplayEntry>) -> Self {
        Self {
            name: name.into(),
            responses: entries
                .into_iter()
                .map(|e| (e.prompt_digest, e.response))
                .collect(),
        }
    }

    /// Reads a JSON Lines file of [`ReplayEntry`] records.
    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: ReplayEntry = serde_json::from_str(line).map_err(|e| {
                std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("{}:{}: {e}", path.display(), n + 1),
                )
            })?;
            entries.push(e);
        }
        Ok(Self::new(format!("replay:{}", path.display()), entries))
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl LlmClient for ReplayClient {
    fn complete(&self, system: &str, user: &str, _: &Decoding) -> Result<String, ClientError> {
        let key = prompt_digest(system, user);
        self.responses
            .get(&key)
            .cloned()
            .ok_or(ClientError::NoResponse(key))
    }

    fn identity(&self) -> &str {
        &self.name
    }
}

#[cfg(feature = "http")]
pub use http::{HttpClient, HttpConfig};

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use serde::{Deserialize, Serialize};

    use super::{ClientError, Decoding, LlmClient};

    /// OpenAI-style chat-completions endpoint settings.
    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct HttpConfig {
        /// Base URL; `/chat/completions` is appended.
        pub base_url: String,
        pub model: String,
        /// Environment variable holding the bearer token.
        pub api_key_env: String,
        pub timeout_secs: u64,
    }

    impl Default for HttpConfig {
        fn default() -> Self {
            Self {
                base_url: "https://api.openai.com/v1".into(),
                model: "gpt-4o".into(),
                api_key_env: "OPENAI_API_KEY".into(),
                timeout_secs: 120,
            }
        }
    }

    #[derive(Debug)]
    pub struct HttpClient {
        cfg: HttpConfig,
        key: Option<String>,
        agent: ureq::Agent,
    }

    impl HttpClient {
        /// Reads the API key from the configured environment variable, if set.
        pub fn new(cfg: HttpConfig) -> Self {
            let agent = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
                .http_status_as_error(false)
                .build()
                .into();
            let key = std::env::var(&cfg.api_key_env).ok();
            Self { cfg, key, agent }
        }
    }

    impl LlmClient for HttpClient {
        fn complete(
            &self,
            system: &str,
            user: &str,
            decoding: &Decoding,
        ) -> Result<String, ClientError> {
            let url = format!(
                "{}/chat/completions",
                self.cfg.base_url.trim_end_matches('/')
            );
            let body = serde_json::json!({
                "model": self.cfg.model,
                "temperature": decoding.temperature,
                "max_tokens": decoding.max_tokens,
                "messages": [
                    {"role": "system", "content": system},
                    {"role": "user", "content": user},
                ],
            });
            let mut req = self.agent.post(&url);
            if let Some(k) = &self.key {
                req = req.header("Authorization", &format!("Bearer {k}"));
            }
            let mut resp = req.send_json(&body).map_err(|e| match e {
                ureq::Error::Timeout(_) => ClientError::Timeout,
                other => ClientError::Transport(other.to_string()),
            })?;
            let status = resp.status().as_u16();
            let text = resp
                .body_mut()
                .read_to_string()
                .map_err(|e| ClientError::Transport(e.to_string()))?;
            match status {
                200..=299 => {}
                429 | 402 => return Err(ClientError::Quota(text)),
                _ => return Err(ClientError::Transport(format!("HTTP {status}: {text}"))),
            }
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| ClientError::Malformed(e.to_string()))?;
            v.pointer("/choices/0/message/content")
                .and_then(|c| c.as_str())
                .map(str::to_owned)
                .ok_or_else(|| ClientError::Malformed("no choices[0].message.content".into()))
        }

        fn identity(&self) -> &str {
            &self.cfg.model
        }
    }
}
