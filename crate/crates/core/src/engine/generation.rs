use serde::Serialize;

use super::{assessment, bump, committed, gate, question, Engine};
use crate::error::EngineError;
use crate::llm::{DifficultyMix, Document, QuestionCounts};
use crate::model::{AssessmentId, Provenance, Question, QuestionDraft, QuestionId, TeacherId};
use crate::store::{IngestPurpose, IngestedDocument, Record};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generated {
    pub questions: Vec<Question>,
    pub revision: u64,
}

impl Engine {
    /// Inserts drafts after `after` (or at the end) in one commit.
    #[allow(clippy::too_many_arguments)]
    fn commit_drafts(
        &self,
        actor: &TeacherId,
        assessment_id: &AssessmentId,
        drafts: Vec<QuestionDraft>,
        after: Option<&QuestionId>,
        provenance: Provenance,
        mut records: Vec<Record>,
        expected: Option<u64>,
    ) -> Result<Generated, EngineError> {
        for d in &drafts {
            d.validate().map_err(|e| EngineError::InvalidContent(e.to_string()))?;
        }
        let now = self.now();
        let mut inner = self.lock();
        let entry = assessment(&inner.state, actor, assessment_id)?;
        gate(entry, expected)?;
        let mut ids = entry.assessment.question_ids.clone();
        let at = match after {
            Some(q) => ids.iter().position(|x| x == q).map_or(ids.len(), |i| i + 1),
            None => ids.len(),
        };
        let questions: Vec<Question> = drafts.into_iter().map(|d| d.into_question(QuestionId::generate(), 1)).collect();
        ids.splice(at..at, questions.iter().map(|q| q.id.clone()));
        records.extend(questions.iter().map(|q| committed(assessment_id, q.clone(), provenance, now)));
        if !questions.is_empty() {
            records.push(Record::QuestionOrderSet { assessment_id: assessment_id.clone(), question_ids: ids });
            records.push(bump(entry));
        }
        inner.commit(records)?;
        Ok(Generated { questions, revision: inner.state.assessments[assessment_id].revision })
    }

    fn check_assessment(&self, actor: &TeacherId, id: &AssessmentId) -> Result<(), EngineError> {
        assessment(&self.lock().state, actor, id).map(|_| ())
    }

    fn ingested(&self, actor: &TeacherId, id: &AssessmentId, purpose: IngestPurpose, document: Document) -> Record {
        Record::DocumentIngested {
            document: IngestedDocument {
                owner: actor.clone(),
                assessment_id: id.clone(),
                purpose,
                digest: document.digest(),
                document,
                received_at: self.now(),
            },
        }
    }

    pub async fn generate_from_topics(
        &self,
        actor: &TeacherId,
        assessment_id: &AssessmentId,
        topics: Vec<String>,
        counts: QuestionCounts,
        difficulty_mix: Option<DifficultyMix>,
        expected: Option<u64>,
    ) -> Result<Generated, EngineError> {
        self.check_assessment(actor, assessment_id)?;
        let drafts = self.gateway.generate_from_topics(topics, counts, difficulty_mix).await?;
        self.commit_drafts(actor, assessment_id, drafts, None, Provenance::Creation, vec![], expected)
    }

    /// Generates new questions from curriculum material. The document is
    /// retained alongside the questions.
    pub async fn generate_from_document(
        &self,
        actor: &TeacherId,
        assessment_id: &AssessmentId,
        document: Document,
        counts: QuestionCounts,
        expected: Option<u64>,
    ) -> Result<Generated, EngineError> {
        self.check_assessment(actor, assessment_id)?;
        let drafts = self.gateway.generate_from_document(document.clone(), counts).await?;
        let record = self.ingested(actor, assessment_id, IngestPurpose::Generate, document);
        self.commit_drafts(actor, assessment_id, drafts, None, Provenance::Creation, vec![record], expected)
    }

    /// Parses an existing exam into questions, keeping its wording.
    pub async fn import_document(
        &self,
        actor: &TeacherId,
        assessment_id: &AssessmentId,
        document: Document,
        expected: Option<u64>,
    ) -> Result<Generated, EngineError> {
        self.check_assessment(actor, assessment_id)?;
        let drafts = self.gateway.parse_imported_assessment(document.clone()).await?;
        let record = self.ingested(actor, assessment_id, IngestPurpose::Import, document);
        self.commit_drafts(actor, assessment_id, drafts, None, Provenance::Import, vec![record], expected)
    }

    /// Variants of an existing question, placed right after it.
    pub async fn generate_similar(
        &self,
        actor: &TeacherId,
        id: &QuestionId,
        count: u32,
        expected: Option<u64>,
    ) -> Result<Generated, EngineError> {
        let (aid, source) = {
            let inner = self.lock();
            let e = question(&inner.state, actor, id)?;
            (e.assessment_id.clone(), e.current().draft())
        };
        let drafts = self.gateway.generate_similar(&source, count).await?;
        self.commit_drafts(actor, &aid, drafts, Some(id), Provenance::Creation, vec![], expected)
    }
}
