use serde::{Deserialize, Serialize};

use super::{assessment, committed, course, view, AssessmentView, Engine};
use crate::error::EngineError;
use crate::export::{render_html, render_pdf, AssessmentDocument, SCHEMA_VERSION};
use crate::model::{Assessment, AssessmentId, CourseId, Provenance, Question, QuestionId, TeacherId};
use crate::store::{Record, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportMode {
    /// Fresh ids; each question starts a new history at version 1.
    #[default]
    Copy,
    /// Ids and full history preserved; fails if any id is taken.
    Restore,
}

fn document(s: &State, id: &AssessmentId) -> AssessmentDocument {
    let entry = &s.assessments[id];
    let questions: Vec<Question> = s.questions_of(id).into_iter().cloned().collect();
    let history = entry.assessment.question_ids.iter().flat_map(|q| s.questions[q].versions.iter().cloned()).collect();
    AssessmentDocument { schema_version: SCHEMA_VERSION, assessment: entry.assessment.clone(), questions, history }
}

impl Engine {
    pub fn export_document(&self, actor: &TeacherId, id: &AssessmentId) -> Result<AssessmentDocument, EngineError> {
        let inner = self.lock();
        assessment(&inner.state, actor, id)?;
        Ok(document(&inner.state, id))
    }

    /// Canonical JSON with full version history.
    pub fn export_json(&self, actor: &TeacherId, id: &AssessmentId) -> Result<String, EngineError> {
        Ok(self.export_document(actor, id)?.to_json())
    }

    fn printable(&self, actor: &TeacherId, id: &AssessmentId) -> Result<(Assessment, Vec<Question>), EngineError> {
        let inner = self.lock();
        let entry = assessment(&inner.state, actor, id)?;
        let questions: Vec<Question> = inner.state.questions_of(id).into_iter().cloned().collect();
        if questions.is_empty() {
            return Err(EngineError::EmptyAssessment);
        }
        Ok((entry.assessment.clone(), questions))
    }

    pub fn export_pdf(&self, actor: &TeacherId, id: &AssessmentId, include_keys: bool) -> Result<Vec<u8>, EngineError> {
        let (a, qs) = self.printable(actor, id)?;
        Ok(render_pdf(&a, &qs, include_keys))
    }

    /// Self-contained HTML: math spans are embedded images, nothing is fetched.
    pub fn export_html(&self, actor: &TeacherId, id: &AssessmentId, include_keys: bool) -> Result<String, EngineError> {
        let (a, qs) = self.printable(actor, id)?;
        Ok(render_html(&a, &qs, include_keys, self.math.as_ref()))
    }

    /// Creates an assessment in `course_id` from an exported document.
    pub fn import_json(
        &self,
        actor: &TeacherId,
        course_id: &CourseId,
        text: &str,
        mode: ImportMode,
    ) -> Result<AssessmentView, EngineError> {
        let doc = AssessmentDocument::parse(text).map_err(EngineError::SchemaViolation)?;
        let now = self.now();
        let mut inner = self.lock();
        course(&inner.state, actor, course_id)?;
        let mut records = Vec::new();
        let (aid, order) = match mode {
            ImportMode::Restore => {
                let s = &inner.state;
                if s.assessments.contains_key(&doc.assessment.id) {
                    return Err(EngineError::AlreadyExists(doc.assessment.id.to_string()));
                }
                if let Some(q) = doc.questions.iter().find(|q| s.questions.contains_key(&q.id)) {
                    return Err(EngineError::AlreadyExists(q.id.to_string()));
                }
                let assessment = Assessment { course_id: course_id.clone(), ..doc.assessment.clone() };
                records.push(Record::AssessmentCreated { assessment });
                for v in doc.history {
                    records.push(Record::QuestionCommitted { assessment_id: doc.assessment.id.clone(), version: v });
                }
                (doc.assessment.id.clone(), doc.assessment.question_ids.clone())
            }
            ImportMode::Copy => {
                let aid = AssessmentId::generate();
                let assessment = Assessment {
                    id: aid.clone(),
                    course_id: course_id.clone(),
                    name: doc.assessment.name,
                    question_ids: vec![],
                };
                records.push(Record::AssessmentCreated { assessment });
                let mut order = Vec::with_capacity(doc.questions.len());
                for q in doc.questions {
                    let fresh = q.draft().into_question(QuestionId::generate(), 1);
                    order.push(fresh.id.clone());
                    records.push(committed(&aid, fresh, Provenance::Import, now));
                }
                (aid, order)
            }
        };
        records.push(Record::QuestionOrderSet { assessment_id: aid.clone(), question_ids: order });
        inner.commit(records)?;
        Ok(view(&inner.state, &inner.state.assessments[&aid]))
    }
}
