//! Minimal HTTP client for OpenAI-compatible chat-completions and embeddings
//! endpoints, plus a deterministic offline stub for tests.
//!
//! One request, one reply. Errors are terminal for the call: no retries, no
//! rate-limit handling, no circuit breaking.

use std::collections::HashMap;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::embed::{Embedder, HashingEmbedder};
use crate::model::Role;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("api key environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("http status {status}: {body}")]
    HttpStatus { status: u16, body: String },
    #[error("could not decode response: {0}")]
    Decode(String),
    #[error("embed called with an empty text list")]
    EmptyInput,
    #[error("stub has no canned response for digest {0}")]
    NoCannedResponse(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub model: String,
    pub temperature: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct ChatReply {
    pub text: String,
    pub prompt_tokens: usize,
    pub completion_tokens: usize,
    /// Wall-clock seconds from request submission to completion receipt.
    pub latency_seconds: f64,
}

pub trait Gateway: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<ChatReply, GatewayError>;
    fn embed(&self, texts: &[String], model: &str) -> Result<Vec<Vec<f64>>, GatewayError>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GatewayConfig {
    pub base_url: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub chat_model: String,
    pub embed_model: String,
    pub timeout_seconds: f64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            base_url: "https://api.openai.com/v1".to_string(),
            api_key_env: "OPENAI_API_KEY".to_string(),
            chat_model: "gpt-4o-mini".to_string(),
            embed_model: "text-embedding-3-small".to_string(),
            timeout_seconds: 60.0,
        }
    }
}

impl GatewayConfig {
    /// Default config with the AFM_BASE_URL environment override applied.
    pub fn from_env() -> Self {
        let mut cfg = GatewayConfig::default();
        if let Ok(url) = std::env::var("AFM_BASE_URL") {
            cfg.base_url = url;
        }
        cfg
    }
}

// Wire structs with fixed field order so request bodies are bit-stable for
// identical inputs.
#[derive(Serialize)]
struct ChatBody<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct EmbedBody<'a> {
    model: &'a str,
    input: &'a [String],
}

/// Canonical JSON request body for a chat call.
pub fn chat_request_body(request: &ChatRequest) -> String {
    serde_json::to_string(&ChatBody {
        model: &request.model,
        messages: &request.messages,
        temperature: request.temperature,
        seed: request.seed,
    })
    .expect("chat body serializes")
}

/// Hex SHA-256 digest of the outgoing message list; the stub's canned map is
/// keyed on this.
pub fn messages_digest(messages: &[ChatMessage]) -> String {
    let json = serde_json::to_string(messages).expect("messages serialize");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    format!("{:x}", hasher.finalize())
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: String,
}

#[derive(Deserialize, Default)]
struct Usage {
    #[serde(default)]
    prompt_tokens: usize,
    #[serde(default)]
    completion_tokens: usize,
}

#[derive(Deserialize)]
struct EmbedResponse {
    data: Vec<EmbedDatum>,
}

#[derive(Deserialize)]
struct EmbedDatum {
    index: usize,
    embedding: Vec<f64>,
}

/// Live client. Construction fails early when the configured key variable is
/// absent, before any request is made.
pub struct HttpGateway {
    config: GatewayConfig,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl HttpGateway {
    pub fn new(config: GatewayConfig) -> Result<Self, GatewayError> {
        let api_key = std::env::var(&config.api_key_env)
            .map_err(|_| GatewayError::MissingApiKey(config.api_key_env.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_seconds))
            .build()
            .map_err(|e| GatewayError::Network(e.to_string()))?;
        Ok(HttpGateway {
            config,
            api_key,
            client,
        })
    }

    fn post(&self, endpoint: &str, body: String) -> Result<(String, f64), GatewayError> {
        let url = format!("{}/{}", self.config.base_url.trim_end_matches('/'), endpoint);
        let start = Instant::now();
        let resp = self
            .client
            .post(url)
            .bearer_auth(&self.api_key)
            .header("content-type", "application/json")
            .body(body)
            .send()
            .map_err(|e| GatewayError::Network(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| GatewayError::Network(e.to_string()))?;
        let latency = start.elapsed().as_secs_f64();
        if !status.is_success() {
            return Err(GatewayError::HttpStatus {
                status: status.as_u16(),
                body: text,
            });
        }
        Ok((text, latency))
    }
}

impl Gateway for HttpGateway {
    fn chat(&self, request: &ChatRequest) -> Result<ChatReply, GatewayError> {
        let (text, latency) = self.post("chat/completions", chat_request_body(request))?;
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| GatewayError::Decode(e.to_string()))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| GatewayError::Decode("response has no choices".to_string()))?;
        let usage = parsed.usage.unwrap_or_default();
        Ok(ChatReply {
            text: choice.message.content,
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
            latency_seconds: latency,
        })
    }

    fn embed(&self, texts: &[String], model: &str) -> Result<Vec<Vec<f64>>, GatewayError> {
        if texts.is_empty() {
            return Err(GatewayError::EmptyInput);
        }
        let body = serde_json::to_string(&EmbedBody {
            model,
            input: texts,
        })
        .expect("embed body serializes");
        let (text, _) = self.post("embeddings", body)?;
        let parsed: EmbedResponse =
            serde_json::from_str(&text).map_err(|e| GatewayError::Decode(e.to_string()))?;
        if parsed.data.len() != texts.len() {
            return Err(GatewayError::Decode(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                parsed.data.len()
            )));
        }
        let mut data = parsed.data;
        data.sort_by_key(|d| d.index);
        Ok(data.into_iter().map(|d| d.embedding).collect())
    }
}

/// Deterministic offline stub. Chat replies come from a canned map keyed by
/// the digest of the outgoing messages (optionally loaded from a recorded
/// fixture file), with an optional default reply for unmatched digests.
/// Embeddings delegate to the local hashing embedder.
#[derive(Debug, Clone, Default)]
pub struct StubGateway {
    canned: HashMap<String, String>,
    default_reply: Option<String>,
}

impl StubGateway {
    pub fn new() -> Self {
        StubGateway::default()
    }

    pub fn with_default(reply: impl Into<String>) -> Self {
        StubGateway {
            canned: HashMap::new(),
            default_reply: Some(reply.into()),
        }
    }

    pub fn respond(mut self, digest: impl Into<String>, reply: impl Into<String>) -> Self {
        self.canned.insert(digest.into(), reply.into());
        self
    }

    /// Transcript-replay mode: loads a JSONL fixture of
    /// `{"digest": ..., "text": ...}` records.
    pub fn from_fixture(path: &Path) -> Result<Self, GatewayError> {
        #[derive(Deserialize)]
        struct Record {
            digest: String,
            text: String,
        }
        let data = std::fs::read_to_string(path).map_err(|e| {
            GatewayError::Decode(format!("fixture {}: {}", path.display(), e))
        })?;
        let mut canned = HashMap::new();
        for line in data.lines().filter(|l| !l.trim().is_empty()) {
            let rec: Record = serde_json::from_str(line)
                .map_err(|e| GatewayError::Decode(format!("fixture {}: {}", path.display(), e)))?;
            canned.insert(rec.digest, rec.text);
        }
        Ok(StubGateway {
            canned,
            default_reply: None,
        })
    }
}

impl Gateway for StubGateway {
    fn chat(&self, request: &ChatRequest) -> Result<ChatReply, GatewayError> {
        let digest = messages_digest(&request.messages);
        let text = self
            .canned
            .get(&digest)
            .cloned()
            .or_else(|| self.default_reply.clone())
            .ok_or(GatewayError::NoCannedResponse(digest))?;
        let prompt_tokens = request
            .messages
            .iter()
            .map(|m| m.content.split_whitespace().count())
            .sum();
        Ok(ChatReply {
            completion_tokens: text.split_whitespace().count(),
            text,
            prompt_tokens,
            latency_seconds: 0.0,
        })
    }

    fn embed(&self, texts: &[String], _model: &str) -> Result<Vec<Vec<f64>>, GatewayError> {
        if texts.is_empty() {
            return Err(GatewayError::EmptyInput);
        }
        let embedder = HashingEmbedder::default();
        texts
            .iter()
            .map(|t| {
                embedder
                    .embed(t)
                    .map_err(|e| GatewayError::Decode(e.to_string()))
            })
            .collect()
    }
}
