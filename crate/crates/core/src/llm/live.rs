//! Production provider speaking the generic chat-completions HTTP contract.

use async_trait::async_trait;
use base64::Engine as _;
use serde_json::{json, Value};

use super::{Document, LlmProvider, MediaType, ProviderCall, ProviderError};

#[derive(Clone, PartialEq, Eq)]
pub struct LiveConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
}

impl std::fmt::Debug for LiveConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveConfig")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl LiveConfig {
    /// Reads `LLM_ENDPOINT`, `LLM_MODEL` and the optional `LLM_API_KEY`.
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let need = |k: &str| get(k).filter(|v| !v.trim().is_empty()).ok_or_else(|| format!("{k} is not set"));
        Ok(Self {
            endpoint: need("LLM_ENDPOINT")?,
            model: need("LLM_MODEL")?,
            api_key: get("LLM_API_KEY").filter(|v| !v.is_empty()),
        })
    }
}

#[derive(Debug, Clone)]
pub struct LiveProvider {
    config: LiveConfig,
    client: reqwest::Client,
}

impl LiveProvider {
    pub fn new(config: LiveConfig) -> Self {
        Self { config, client: reqwest::Client::new() }
    }

    fn body(&self, call: &ProviderCall<'_>) -> Value {
        let mut user = vec![json!({ "type": "text", "text": call.prompt.user })];
        if let Some(doc) = call.request.document() {
            user.push(document_part(doc));
        }
        json!({
            "model": self.config.model,
            "temperature": 0,
            "response_format": { "type": "json_object" },
            "messages": [
                { "role": "system", "content": call.prompt.system },
                { "role": "user", "content": user },
            ],
        })
    }
}

fn document_part(doc: &Document) -> Value {
    let url = format!(
        "data:{};base64,{}",
        doc.media_type.mime(),
        base64::engine::general_purpose::STANDARD.encode(&doc.data)
    );
    match doc.media_type {
        MediaType::Pdf => json!({ "type": "file", "file": { "filename": "document.pdf", "file_data": url } }),
        MediaType::Png | MediaType::Jpeg => json!({ "type": "image_url", "image_url": { "url": url } }),
    }
}

#[async_trait]
impl LlmProvider for LiveProvider {
    fn name(&self) -> &str {
        "live"
    }

    async fn complete(&self, call: ProviderCall<'_>) -> Result<String, ProviderError> {
        let mut req = self.client.post(&self.config.endpoint).json(&self.body(&call));
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| ProviderError::transient(format!("request failed: {e}")))?;
        let status = resp.status();
        let text = resp.text().await.map_err(|e| ProviderError::transient(format!("reading body: {e}")))?;
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(ProviderError::transient(format!("HTTP {status}: {}", snippet(&text))));
        }
        if !status.is_success() {
            return Err(ProviderError::permanent(format!("HTTP {status}: {}", snippet(&text))));
        }
        let body: Value =
            serde_json::from_str(&text).map_err(|e| ProviderError::permanent(format!("response is not JSON: {e}")))?;
        body.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| ProviderError::permanent("response has no choices[0].message.content"))
    }
}

fn snippet(text: &str) -> String {
    text.chars().take(200).collect()
}
