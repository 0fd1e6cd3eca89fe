use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use tokio::sync::Semaphore;

use super::{
    extract::parse_output, DifficultyMix, Document, LlmError, LlmOutput, LlmProvider, LlmRequest, LlmResponse,
    MockProvider, ProviderCall, ProviderErrorKind, QuestionCounts, RenderedPrompt, TemplateSet,
};
use crate::model::{PartValue, QuestionDraft, QuestionId, QuestionPart};

/// Hard ceiling on retries, whatever the configuration says.
pub const MAX_RETRIES: u32 = 2;

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    /// Per-attempt timeout.
    pub timeout: Duration,
    /// Extra attempts after the first; clamped to [`MAX_RETRIES`].
    pub max_retries: u32,
    /// Backoff before retry n is `backoff_base * 2^(n-1)`.
    pub backoff_base: Duration,
    /// Maximum concurrent outbound calls.
    pub concurrency: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(60),
            max_retries: 2,
            backoff_base: Duration::from_millis(250),
            concurrency: 4,
        }
    }
}

#[derive(Clone)]
pub struct Gateway {
    provider: Arc<dyn LlmProvider>,
    templates: Arc<TemplateSet>,
    config: GatewayConfig,
    permits: Arc<Semaphore>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway").field("provider", &self.provider.name()).field("config", &self.config).finish()
    }
}

impl Gateway {
    pub fn new(provider: Arc<dyn LlmProvider>, templates: TemplateSet, config: GatewayConfig) -> Self {
        let permits = Arc::new(Semaphore::new(config.concurrency.max(1)));
        Self { provider, templates: Arc::new(templates), config, permits }
    }

    /// Built-in mock provider and templates, with short backoff.
    pub fn mock() -> Self {
        Self::with_provider(Arc::new(MockProvider::new()))
    }

    pub fn with_provider(provider: Arc<dyn LlmProvider>) -> Self {
        let config = GatewayConfig { backoff_base: Duration::from_millis(1), ..GatewayConfig::default() };
        Self::new(provider, TemplateSet::builtin(), config)
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn render(&self, request: &LlmRequest) -> Result<RenderedPrompt, LlmError> {
        let json = |d: &QuestionDraft| serde_json::to_string_pretty(d).expect("drafts serialize");
        let part_name =
            |p: &QuestionPart| serde_json::to_value(p).expect("parts serialize").as_str().unwrap().to_owned();
        let mut vars: BTreeMap<&str, String> = BTreeMap::new();
        match request {
            LlmRequest::GenerateFromTopics { topics, counts, difficulty_mix } => {
                vars.insert("topics", topics.join("; "));
                vars.insert("mc", counts.mc.to_string());
                vars.insert("fr", counts.fr.to_string());
                let mix = match difficulty_mix {
                    Some(m) => format!("easy {}, medium {}, hard {}", m.easy, m.medium, m.hard),
                    None => "teacher's choice".into(),
                };
                vars.insert("difficulty_mix", mix);
            }
            LlmRequest::GenerateFromDocument { document, counts } => {
                vars.insert("media_type", document.media_type.mime().into());
                vars.insert("mc", counts.mc.to_string());
                vars.insert("fr", counts.fr.to_string());
            }
            LlmRequest::ParseImportedAssessment { document } => {
                vars.insert("media_type", document.media_type.mime().into());
            }
            LlmRequest::EditPart { question, part, instruction } => {
                let current = question.clone().into_question(QuestionId::from("q_prompt"), 1).part_text(*part);
                vars.insert("question", json(question));
                vars.insert("part", part_name(part));
                vars.insert("current", current);
                vars.insert("instruction", instruction.clone());
            }
            LlmRequest::EditQuestion { question, instruction, scope } => {
                vars.insert("question", json(question));
                vars.insert("scope", scope.iter().map(part_name).collect::<Vec<_>>().join(", "));
                vars.insert("instruction", instruction.clone());
            }
            LlmRequest::GenerateSimilar { question, count } => {
                vars.insert("question", json(question));
                vars.insert("count", count.to_string());
            }
            LlmRequest::InferCommand { before, after, part } => {
                let text =
                    |d: &QuestionDraft| d.clone().into_question(QuestionId::from("q_prompt"), 1).part_text(*part);
                vars.insert("part", part_name(part));
                vars.insert("before", text(before));
                vars.insert("after", text(after));
            }
            LlmRequest::SimilarityJudge { candidate, existing } => {
                vars.insert("examples", self.templates.render_examples());
                let list = if existing.is_empty() {
                    "(none)".to_owned()
                } else {
                    existing.iter().enumerate().map(|(i, c)| format!("[{i}] {c}")).collect::<Vec<_>>().join("\n")
                };
                vars.insert("existing", list);
                vars.insert("candidate", candidate.clone());
            }
            LlmRequest::FixLatex { text } => {
                vars.insert("text", text.clone());
            }
        }
        Ok(self.templates.get(request.task()).render(&vars)?)
    }

    /// Runs one request end to end: render, call with retry, validate.
    pub async fn run(&self, request: LlmRequest) -> Result<LlmResponse, LlmError> {
        let prompt = self.render(&request)?;
        let task = request.task();
        let provider = self.provider.name().to_owned();
        let attempts_allowed = 1 + self.config.max_retries.min(MAX_RETRIES);
        let mut attempt = 0;
        let raw = loop {
            attempt += 1;
            let call = ProviderCall { request: &request, prompt: &prompt };
            let result = {
                let _permit = self.permits.acquire().await.expect("semaphore never closed");
                tokio::time::timeout(self.config.timeout, self.provider.complete(call)).await
            };
            let retryable = match result {
                Ok(Ok(raw)) => break raw,
                Ok(Err(e)) => match e.kind {
                    ProviderErrorKind::Unmatched => {
                        return Err(LlmError::UnmatchedRequest { task, digest: request.digest() });
                    }
                    ProviderErrorKind::Permanent => {
                        return Err(LlmError::Provider { provider, attempts: attempt, message: e.message });
                    }
                    ProviderErrorKind::Transient => {
                        LlmError::Provider { provider: provider.clone(), attempts: attempt, message: e.message }
                    }
                },
                Err(_elapsed) => LlmError::Timeout { provider: provider.clone(), attempts: attempt },
            };
            if attempt >= attempts_allowed {
                return Err(retryable);
            }
            tracing::warn!(%provider, ?task, attempt, error = %retryable, "retrying LLM call");
            tokio::time::sleep(self.config.backoff_base * 2u32.pow(attempt - 1)).await;
        };
        let output = parse_output(&request, &raw).map_err(|reason| LlmError::SchemaViolation {
            task,
            reason,
            raw: raw.clone(),
        })?;
        Ok(LlmResponse { task, output, raw })
    }

    pub async fn generate_from_topics(
        &self,
        topics: Vec<String>,
        counts: QuestionCounts,
        difficulty_mix: Option<DifficultyMix>,
    ) -> Result<Vec<QuestionDraft>, LlmError> {
        let topics: Vec<String> = topics.into_iter().map(|t| t.trim().to_owned()).filter(|t| !t.is_empty()).collect();
        if topics.is_empty() {
            return Err(LlmError::InvalidArgument("at least one topic is required".into()));
        }
        if counts.total() == 0 {
            return Err(LlmError::EmptyRequest);
        }
        drafts(self.run(LlmRequest::GenerateFromTopics { topics, counts, difficulty_mix }).await?)
    }

    pub async fn generate_from_document(
        &self,
        document: Document,
        counts: QuestionCounts,
    ) -> Result<Vec<QuestionDraft>, LlmError> {
        if document.data.is_empty() {
            return Err(LlmError::InvalidArgument("document is empty".into()));
        }
        if counts.total() == 0 {
            return Err(LlmError::EmptyRequest);
        }
        drafts(self.run(LlmRequest::GenerateFromDocument { document, counts }).await?)
    }

    pub async fn parse_imported_assessment(&self, document: Document) -> Result<Vec<QuestionDraft>, LlmError> {
        if document.data.is_empty() {
            return Err(LlmError::InvalidArgument("document is empty".into()));
        }
        drafts(self.run(LlmRequest::ParseImportedAssessment { document }).await?)
    }

    pub async fn generate_similar(&self, question: &QuestionDraft, count: u32) -> Result<Vec<QuestionDraft>, LlmError> {
        if count == 0 {
            return Err(LlmError::EmptyRequest);
        }
        drafts(self.run(LlmRequest::GenerateSimilar { question: question.clone(), count }).await?)
    }

    pub async fn edit_part(
        &self,
        question: &QuestionDraft,
        part: QuestionPart,
        instruction: &str,
    ) -> Result<PartValue, LlmError> {
        let req = LlmRequest::EditPart { question: question.clone(), part, instruction: instruction.to_owned() };
        match self.run(req).await?.output {
            LlmOutput::Part(v) => Ok(v),
            other => unreachable!("edit_part produced {other:?}"),
        }
    }

    pub async fn edit_question(
        &self,
        question: &QuestionDraft,
        instruction: &str,
        scope: Vec<QuestionPart>,
    ) -> Result<QuestionDraft, LlmError> {
        let req = LlmRequest::EditQuestion { question: question.clone(), instruction: instruction.to_owned(), scope };
        match self.run(req).await?.output {
            LlmOutput::Question(q) => Ok(q),
            other => unreachable!("edit_question produced {other:?}"),
        }
    }

    pub async fn infer_command(
        &self,
        before: &QuestionDraft,
        after: &QuestionDraft,
        part: QuestionPart,
    ) -> Result<String, LlmError> {
        let req = LlmRequest::InferCommand { before: before.clone(), after: after.clone(), part };
        match self.run(req).await?.output {
            LlmOutput::Command(c) => Ok(c),
            other => unreachable!("infer_command produced {other:?}"),
        }
    }

    /// Index of the first existing command judged equivalent to `candidate`.
    pub async fn judge_similarity(&self, candidate: &str, existing: Vec<String>) -> Result<Option<usize>, LlmError> {
        if existing.is_empty() {
            return Ok(None);
        }
        let req = LlmRequest::SimilarityJudge { candidate: candidate.to_owned(), existing };
        match self.run(req).await?.output {
            LlmOutput::Similarity(i) => Ok(i),
            other => unreachable!("similarity_judge produced {other:?}"),
        }
    }

    pub async fn fix_latex(&self, text: &str) -> Result<String, LlmError> {
        match self.run(LlmRequest::FixLatex { text: text.to_owned() }).await?.output {
            LlmOutput::Latex(t) => Ok(t),
            other => unreachable!("fix_latex produced {other:?}"),
        }
    }
}

fn drafts(resp: LlmResponse) -> Result<Vec<QuestionDraft>, LlmError> {
    match resp.output {
        LlmOutput::Drafts(d) => Ok(d),
        other => unreachable!("{:?} produced {other:?}", resp.task),
    }
}
