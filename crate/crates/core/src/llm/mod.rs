//! The single boundary for model interactions.
//!
//! Callers build a typed [`LlmRequest`], the [`Gateway`] renders the task's
//! prompt template, calls the configured [`LlmProvider`] (with timeout, retry
//! and a concurrency cap), then extracts and validates the structured reply.
//! Nothing that fails validation ever leaves the gateway.

mod extract;
mod gateway;
mod live;
pub mod mock;
mod template;

use std::fmt;

use async_trait::async_trait;
use base64::Engine as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{Difficulty, PartValue, QuestionDraft, QuestionPart};

pub use extract::{extract_json, parse_output, ExtractError};
pub use gateway::{Gateway, GatewayConfig};
pub use live::{LiveConfig, LiveProvider};
pub use mock::{Fixture, FixtureStore, MockProvider};
pub use template::{PromptTemplate, RenderedPrompt, SimilarityExample, TemplateError, TemplateSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmTask {
    GenerateFromTopics,
    GenerateFromDocument,
    ParseImportedAssessment,
    EditPart,
    EditQuestion,
    GenerateSimilar,
    InferCommand,
    SimilarityJudge,
    FixLatex,
}

impl LlmTask {
    pub const ALL: [LlmTask; 9] = [
        LlmTask::GenerateFromTopics,
        LlmTask::GenerateFromDocument,
        LlmTask::ParseImportedAssessment,
        LlmTask::EditPart,
        LlmTask::EditQuestion,
        LlmTask::GenerateSimilar,
        LlmTask::InferCommand,
        LlmTask::SimilarityJudge,
        LlmTask::FixLatex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LlmTask::GenerateFromTopics => "generate_from_topics",
            LlmTask::GenerateFromDocument => "generate_from_document",
            LlmTask::ParseImportedAssessment => "parse_imported_assessment",
            LlmTask::EditPart => "edit_part",
            LlmTask::EditQuestion => "edit_question",
            LlmTask::GenerateSimilar => "generate_similar",
            LlmTask::InferCommand => "infer_command",
            LlmTask::SimilarityJudge => "similarity_judge",
            LlmTask::FixLatex => "fix_latex",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MediaType {
    #[serde(rename = "application/pdf")]
    Pdf,
    #[serde(rename = "image/png")]
    Png,
    #[serde(rename = "image/jpeg")]
    Jpeg,
}

impl MediaType {
    pub fn parse(s: &str) -> Result<Self, LlmError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "application/pdf" | "pdf" => Ok(MediaType::Pdf),
            "image/png" | "png" => Ok(MediaType::Png),
            "image/jpeg" | "image/jpg" | "jpeg" | "jpg" => Ok(MediaType::Jpeg),
            other => Err(LlmError::UnsupportedMediaType(other.to_owned())),
        }
    }

    pub fn mime(self) -> &'static str {
        match self {
            MediaType::Pdf => "application/pdf",
            MediaType::Png => "image/png",
            MediaType::Jpeg => "image/jpeg",
        }
    }
}

/// An uploaded file. Bytes serialize as base64.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub media_type: MediaType,
    #[serde(serialize_with = "ser_b64", deserialize_with = "de_b64")]
    pub data: Vec<u8>,
}

impl fmt::Debug for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Document").field("media_type", &self.media_type).field("len", &self.data.len()).finish()
    }
}

impl Document {
    pub fn new(media_type: &str, data: Vec<u8>) -> Result<Self, LlmError> {
        let media_type = MediaType::parse(media_type)?;
        if data.is_empty() {
            return Err(LlmError::InvalidArgument("document is empty".into()));
        }
        Ok(Self { media_type, data })
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(&self.data))
    }
}

pub(crate) fn ser_b64<S: Serializer>(data: &[u8], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&base64::engine::general_purpose::STANDARD.encode(data))
}

pub(crate) fn de_b64<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
    let s = String::deserialize(d)?;
    base64::engine::general_purpose::STANDARD.decode(s).map_err(serde::de::Error::custom)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionCounts {
    pub mc: u32,
    pub fr: u32,
}

impl QuestionCounts {
    pub fn total(self) -> u32 {
        self.mc + self.fr
    }
}

/// Relative weights for the difficulty of generated questions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifficultyMix {
    #[serde(default)]
    pub easy: u32,
    #[serde(default)]
    pub medium: u32,
    #[serde(default)]
    pub hard: u32,
}

impl DifficultyMix {
    /// Expands weights into a repeating sequence, e.g. {2,1,0} → [E, E, M].
    pub fn sequence(&self) -> Vec<Difficulty> {
        let mut seq = Vec::new();
        for (d, n) in [(Difficulty::Easy, self.easy), (Difficulty::Medium, self.medium), (Difficulty::Hard, self.hard)]
        {
            seq.extend(std::iter::repeat_n(d, n.min(100) as usize));
        }
        seq
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", content = "payload", rename_all = "snake_case")]
pub enum LlmRequest {
    GenerateFromTopics { topics: Vec<String>, counts: QuestionCounts, difficulty_mix: Option<DifficultyMix> },
    GenerateFromDocument { document: Document, counts: QuestionCounts },
    ParseImportedAssessment { document: Document },
    EditPart { question: QuestionDraft, part: QuestionPart, instruction: String },
    EditQuestion { question: QuestionDraft, instruction: String, scope: Vec<QuestionPart> },
    GenerateSimilar { question: QuestionDraft, count: u32 },
    InferCommand { before: QuestionDraft, after: QuestionDraft, part: QuestionPart },
    SimilarityJudge { candidate: String, existing: Vec<String> },
    FixLatex { text: String },
}

impl LlmRequest {
    pub fn task(&self) -> LlmTask {
        match self {
            LlmRequest::GenerateFromTopics { .. } => LlmTask::GenerateFromTopics,
            LlmRequest::GenerateFromDocument { .. } => LlmTask::GenerateFromDocument,
            LlmRequest::ParseImportedAssessment { .. } => LlmTask::ParseImportedAssessment,
            LlmRequest::EditPart { .. } => LlmTask::EditPart,
            LlmRequest::EditQuestion { .. } => LlmTask::EditQuestion,
            LlmRequest::GenerateSimilar { .. } => LlmTask::GenerateSimilar,
            LlmRequest::InferCommand { .. } => LlmTask::InferCommand,
            LlmRequest::SimilarityJudge { .. } => LlmTask::SimilarityJudge,
            LlmRequest::FixLatex { .. } => LlmTask::FixLatex,
        }
    }

    /// SHA-256 of the request's canonical JSON; keys recorded fixtures.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("requests always serialize");
        hex::encode(Sha256::digest(json))
    }

    pub fn document(&self) -> Option<&Document> {
        match self {
            LlmRequest::GenerateFromDocument { document, .. } | LlmRequest::ParseImportedAssessment { document } => {
                Some(document)
            }
            _ => None,
        }
    }
}

/// Validated, task-specific result.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmOutput {
    Drafts(Vec<QuestionDraft>),
    Part(PartValue),
    Question(QuestionDraft),
    Command(String),
    /// Index into the request's existing-command list.
    Similarity(Option<usize>),
    Latex(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlmResponse {
    pub task: LlmTask,
    pub output: LlmOutput,
    /// Provider text as received, kept for audit.
    pub raw: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderErrorKind {
    /// Network trouble, rate limiting, server errors: worth retrying.
    Transient,
    /// The provider refused the request; retrying will not help.
    Permanent,
    /// Mock only: no rule or fixture covers the request.
    Unmatched,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct ProviderError {
    pub kind: ProviderErrorKind,
    pub message: String,
}

impl ProviderError {
    pub fn transient(message: impl Into<String>) -> Self {
        Self { kind: ProviderErrorKind::Transient, message: message.into() }
    }

    pub fn permanent(message: impl Into<String>) -> Self {
        Self { kind: ProviderErrorKind::Permanent, message: message.into() }
    }

    pub fn unmatched(message: impl Into<String>) -> Self {
        Self { kind: ProviderErrorKind::Unmatched, message: message.into() }
    }
}

/// What a provider sees: the typed request and its rendered prompt.
#[derive(Debug, Clone, Copy)]
pub struct ProviderCall<'a> {
    pub request: &'a LlmRequest,
    pub prompt: &'a RenderedPrompt,
}

#[async_trait]
pub trait LlmProvider: Send + Sync {
    fn name(&self) -> &str;

    /// Returns the model's raw text reply.
    async fn complete(&self, call: ProviderCall<'_>) -> Result<String, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("{provider} failed after {attempts} attempt(s): {message}")]
    Provider { provider: String, attempts: u32, message: String },
    #[error("{provider} timed out after {attempts} attempt(s)")]
    Timeout { provider: String, attempts: u32 },
    #[error("no mock rule or fixture for {task:?} request {digest}")]
    UnmatchedRequest { task: LlmTask, digest: String },
    #[error("{task:?} reply violates its schema: {reason}")]
    SchemaViolation { task: LlmTask, reason: String, raw: String },
    #[error("request asks for nothing")]
    EmptyRequest,
    #[error("unsupported media type `{0}`")]
    UnsupportedMediaType(String),
    #[error("invalid request: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

impl LlmError {
    /// Errors caused by the caller's input rather than by the model.
    pub fn is_caller_error(&self) -> bool {
        matches!(self, LlmError::EmptyRequest | LlmError::UnsupportedMediaType(_) | LlmError::InvalidArgument(_))
    }
}
