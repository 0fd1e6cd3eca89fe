//! Deterministic offline provider.
//!
//! Recorded fixtures, keyed by request digest, win over the built-in keyword
//! rules. A request neither covers fails as unmatched. The reply is a pure
//! function of the request and the fixture set.

mod fractions;
mod rules;

use std::collections::BTreeMap;
use std::path::Path;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{LlmProvider, LlmRequest, LlmTask, ProviderCall, ProviderError};

pub use fractions::{clear_fractions, has_fractions};
pub use rules::{similar as mock_similar, unicode_to_latex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub digest: String,
    pub task: LlmTask,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Reply text, or a JSON value that is serialized as the reply.
    pub response: Value,
}

impl Fixture {
    pub fn for_request(request: &LlmRequest, response: Value) -> Self {
        Self { digest: request.digest(), task: request.task(), note: None, response }
    }

    pub fn reply(&self) -> String {
        match &self.response {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("cannot read fixture file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed fixture file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported fixture file version {0}")]
    Version(u32),
    #[error("fixture {0} is not a 64-digit hex digest")]
    Digest(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixtureFile {
    version: u32,
    fixtures: Vec<Fixture>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FixtureStore {
    by_digest: BTreeMap<String, Fixture>,
}

impl FixtureStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, FixtureError> {
        let file: FixtureFile = serde_json::from_str(text)?;
        if file.version != 1 {
            return Err(FixtureError::Version(file.version));
        }
        let mut store = Self::new();
        for f in file.fixtures {
            if f.digest.len() != 64 || !f.digest.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(FixtureError::Digest(f.digest));
            }
            store.insert(f);
        }
        Ok(store)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FixtureError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Loads every `*.json` file in `dir`, later files overriding earlier ones.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, FixtureError> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut store = Self::new();
        for p in paths {
            store.extend(Self::load(p)?);
        }
        Ok(store)
    }

    pub fn to_json(&self) -> String {
        let file = FixtureFile { version: 1, fixtures: self.by_digest.values().cloned().collect() };
        serde_json::to_string_pretty(&file).expect("fixtures serialize")
    }

    pub fn insert(&mut self, fixture: Fixture) {
        self.by_digest.insert(fixture.digest.clone(), fixture);
    }

    pub fn extend(&mut self, other: FixtureStore) {
        self.by_digest.extend(other.by_digest);
    }

    pub fn get(&self, digest: &str) -> Option<&Fixture> {
        self.by_digest.get(digest)
    }

    pub fn len(&self) -> usize {
        self.by_digest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_digest.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct MockProvider {
    fixtures: FixtureStore,
}

impl MockProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fixtures(fixtures: FixtureStore) -> Self {
        Self { fixtures }
    }

    pub fn fixtures(&self) -> &FixtureStore {
        &self.fixtures
    }

    /// The reply for `request`, computed without side effects.
    pub fn respond(&self, request: &LlmRequest) -> Result<String, ProviderError> {
        if let Some(f) = self.fixtures.get(&request.digest()) {
            return Ok(f.reply());
        }
        let unmatched = || ProviderError::unmatched(format!("no mock rule for {}", request.task().name()));
        let value = match request {
            LlmRequest::GenerateFromTopics { topics, counts, difficulty_mix } => {
                json!({ "questions": rules::generate_from_topics(topics, *counts, *difficulty_mix) })
            }
            LlmRequest::GenerateFromDocument { .. } | LlmRequest::ParseImportedAssessment { .. } => {
                return Err(unmatched());
            }
            LlmRequest::EditPart { question, part, instruction } => {
                let rule = rules::TextRule::classify(instruction).ok_or_else(unmatched)?;
                json!({ "content": rule.part(question, *part) })
            }
            LlmRequest::EditQuestion { question, instruction, scope } => {
                let rule = rules::TextRule::classify(instruction).ok_or_else(unmatched)?;
                json!({ "question": rule.question(question, scope) })
            }
            LlmRequest::GenerateSimilar { question, count } => {
                json!({ "questions": rules::generate_similar(question, *count) })
            }
            LlmRequest::InferCommand { before, after, part } => {
                json!({ "command": rules::infer_command(before, after, *part) })
            }
            LlmRequest::SimilarityJudge { candidate, existing } => {
                json!({ "similar_to": rules::judge(candidate, existing) })
            }
            LlmRequest::FixLatex { text } => json!({ "text": rules::unicode_to_latex(text) }),
        };
        Ok(value.to_string())
    }
}

#[async_trait]
impl LlmProvider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    async fn complete(&self, call: ProviderCall<'_>) -> Result<String, ProviderError> {
        self.respond(call.request)
    }
}
