use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{assessment, bump, committed, gate, question, Engine, Registration};
use crate::command::{CommandOrigin, ScopeTags};
use crate::error::EngineError;
use crate::model::{
    Answers, AssessmentId, CourseId, Difficulty, PartValue, Provenance, Question, QuestionDraft, QuestionFormat,
    QuestionId, QuestionPart, QuestionVersion, TeacherId,
};
use crate::store::Record;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionChange {
    pub question: Question,
    pub revision: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManualEditOutcome {
    pub question: Question,
    pub revision: u64,
    /// False when the new value equals the current one and nothing was committed.
    pub changed: bool,
    /// The command inferred from this edit, if inference succeeded.
    pub inferred: Option<Registration>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShuffleOutcome {
    pub changed: Vec<QuestionId>,
    pub revision: u64,
}

/// Conjunctive filters; absent fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchQuery {
    pub keyword: Option<String>,
    pub topic: Option<String>,
    pub difficulty: Option<Difficulty>,
    pub format: Option<QuestionFormat>,
    pub course_id: Option<CourseId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchHit {
    pub question: Question,
    pub assessment_id: AssessmentId,
    pub course_id: CourseId,
    pub position: usize,
}

fn insert_at(ids: &mut Vec<QuestionId>, position: Option<usize>, id: QuestionId) -> Result<(), EngineError> {
    let at = position.unwrap_or(ids.len());
    if at > ids.len() {
        return Err(EngineError::InvalidArgument(format!("position {at} is past the end ({})", ids.len())));
    }
    ids.insert(at, id);
    Ok(())
}

fn order_set(assessment_id: &AssessmentId, question_ids: Vec<QuestionId>) -> Record {
    Record::QuestionOrderSet { assessment_id: assessment_id.clone(), question_ids }
}

fn lower_contains(haystack: &str, needle: &str) -> bool {
    haystack.to_lowercase().contains(&needle.to_lowercase())
}

impl Engine {
    pub fn create_question(
        &self,
        actor: &TeacherId,
        assessment_id: &AssessmentId,
        draft: QuestionDraft,
        position: Option<usize>,
        expected: Option<u64>,
    ) -> Result<QuestionChange, EngineError> {
        draft.validate()?;
        self.add_question(actor, assessment_id, draft, position, Provenance::Creation, expected)
    }

    fn add_question(
        &self,
        actor: &TeacherId,
        assessment_id: &AssessmentId,
        draft: QuestionDraft,
        position: Option<usize>,
        provenance: Provenance,
        expected: Option<u64>,
    ) -> Result<QuestionChange, EngineError> {
        let now = self.now();
        let mut inner = self.lock();
        let entry = assessment(&inner.state, actor, assessment_id)?;
        gate(entry, expected)?;
        let q = draft.into_question(QuestionId::generate(), 1);
        let mut ids = entry.assessment.question_ids.clone();
        insert_at(&mut ids, position, q.id.clone())?;
        let records =
            vec![committed(assessment_id, q.clone(), provenance, now), order_set(assessment_id, ids), bump(entry)];
        inner.commit(records)?;
        Ok(QuestionChange { question: q, revision: 0 }.with_revision(&inner.state))
    }

    pub fn get_question(&self, actor: &TeacherId, id: &QuestionId) -> Result<Question, EngineError> {
        Ok(question(&self.lock().state, actor, id)?.current().clone())
    }

    /// Every version, oldest first. Deleted questions keep their history.
    pub fn question_history(&self, actor: &TeacherId, id: &QuestionId) -> Result<Vec<QuestionVersion>, EngineError> {
        let inner = self.lock();
        let s = &inner.state;
        match s.questions.get(id) {
            Some(e) if s.owner_of_question(id) == Some(actor) => Ok(e.versions.clone()),
            _ => Err(EngineError::UnknownQuestion(id.to_string())),
        }
    }

    /// Copies a question's current content into a new question placed right
    /// after it.
    pub fn duplicate_question(
        &self,
        actor: &TeacherId,
        id: &QuestionId,
        expected: Option<u64>,
    ) -> Result<QuestionChange, EngineError> {
        let now = self.now();
        let mut inner = self.lock();
        let source = question(&inner.state, actor, id)?;
        let entry = &inner.state.assessments[&source.assessment_id];
        gate(entry, expected)?;
        let copy = source.current().draft().into_question(QuestionId::generate(), 1);
        let mut ids = entry.assessment.question_ids.clone();
        let at = ids.iter().position(|q| q == id).map_or(ids.len(), |i| i + 1);
        ids.insert(at, copy.id.clone());
        let aid = entry.assessment.id.clone();
        let records = vec![committed(&aid, copy.clone(), Provenance::Creation, now), order_set(&aid, ids), bump(entry)];
        inner.commit(records)?;
        Ok(QuestionChange { question: copy, revision: 0 }.with_revision(&inner.state))
    }

    /// Removes a question from its assessment. Its history is retained.
    pub fn delete_question(
        &self,
        actor: &TeacherId,
        id: &QuestionId,
        expected: Option<u64>,
    ) -> Result<u64, EngineError> {
        let mut inner = self.lock();
        let q = question(&inner.state, actor, id)?;
        let entry = &inner.state.assessments[&q.assessment_id];
        gate(entry, expected)?;
        let aid = entry.assessment.id.clone();
        let records =
            vec![Record::QuestionDeleted { assessment_id: aid.clone(), question_id: id.clone() }, bump(entry)];
        inner.commit(records)?;
        Ok(inner.state.assessments[&aid].revision)
    }

    /// Reverts to the content before the most recent non-undo change. Repeated
    /// undo keeps walking backwards; nothing is ever removed from history.
    pub fn undo_question(
        &self,
        actor: &TeacherId,
        id: &QuestionId,
        expected: Option<u64>,
    ) -> Result<QuestionChange, EngineError> {
        let now = self.now();
        let mut inner = self.lock();
        let q = question(&inner.state, actor, id)?;
        let entry = &inner.state.assessments[&q.assessment_id];
        gate(entry, expected)?;
        let stack = q.undo_stack();
        if stack.len() < 2 {
            return Err(EngineError::NothingToUndo);
        }
        let target = stack[stack.len() - 2];
        let current = q.current();
        let restored = Question {
            id: current.id.clone(),
            version: current.version + 1,
            ..q.versions[target as usize - 1].snapshot.clone()
        };
        let aid = entry.assessment.id.clone();
        let records = vec![committed(&aid, restored.clone(), Provenance::Undo, now), bump(entry)];
        inner.commit(records)?;
        Ok(QuestionChange { question: restored, revision: 0 }.with_revision(&inner.state))
    }

    /// Direct edit of one part. Commits a new version, then asks the model to
    /// describe the edit as a reusable command (except for difficulty).
    pub async fn manual_edit(
        &self,
        actor: &TeacherId,
        id: &QuestionId,
        part: QuestionPart,
        value: PartValue,
        expected: Option<u64>,
    ) -> Result<ManualEditOutcome, EngineError> {
        let now = self.now();
        let (before, after, revision) = {
            let mut inner = self.lock();
            let q = question(&inner.state, actor, id)?;
            let entry = &inner.state.assessments[&q.assessment_id];
            gate(entry, expected)?;
            let current = q.current().clone();
            let mut next = current.with_part(part, value).map_err(|e| EngineError::InvalidContent(e.to_string()))?;
            next.validate().map_err(|e| EngineError::InvalidContent(e.to_string()))?;
            if next.same_content(&current) {
                return Ok(ManualEditOutcome {
                    question: current,
                    revision: entry.revision,
                    changed: false,
                    inferred: None,
                });
            }
            next.version += 1;
            let aid = entry.assessment.id.clone();
            let records = vec![committed(&aid, next.clone(), Provenance::Manual, now), bump(entry)];
            inner.commit(records)?;
            (current, next, inner.state.assessments[&aid].revision)
        };
        let inferred =
            if part == QuestionPart::Difficulty { None } else { self.infer(actor, &before, &after, part).await };
        Ok(ManualEditOutcome { question: after, revision, changed: true, inferred })
    }

    async fn infer(
        &self,
        actor: &TeacherId,
        before: &Question,
        after: &Question,
        part: QuestionPart,
    ) -> Option<Registration> {
        let text = match self.gateway.infer_command(&before.draft(), &after.draft(), part).await {
            Ok(t) => t,
            Err(e) => {
                tracing::warn!(question = %after.id, error = %e, "command inference failed");
                return None;
            }
        };
        let tags = ScopeTags::single(part).ok()?;
        match self.register_command(actor, &text, tags, CommandOrigin::InferredFromManual).await {
            Ok(r) => Some(r),
            Err(e) => {
                tracing::warn!(question = %after.id, error = %e, "registering inferred command failed");
                None
            }
        }
    }

    pub fn reorder_questions(
        &self,
        actor: &TeacherId,
        assessment_id: &AssessmentId,
        order: Vec<QuestionId>,
        expected: Option<u64>,
    ) -> Result<u64, EngineError> {
        let mut inner = self.lock();
        let entry = assessment(&inner.state, actor, assessment_id)?;
        gate(entry, expected)?;
        let current = &entry.assessment.question_ids;
        let given: HashSet<&QuestionId> = order.iter().collect();
        if order.len() != current.len() || given.len() != order.len() || !current.iter().all(|q| given.contains(q)) {
            return Err(EngineError::NotAPermutation);
        }
        if order == *current {
            return Ok(entry.revision);
        }
        let records = vec![order_set(assessment_id, order), bump(entry)];
        inner.commit(records)?;
        Ok(inner.state.assessments[assessment_id].revision)
    }

    /// Seeded permutation of every multiple-choice option list. Questions
    /// whose order happens not to change get no new version.
    pub fn shuffle_mc_options(
        &self,
        actor: &TeacherId,
        assessment_id: &AssessmentId,
        seed: u64,
        expected: Option<u64>,
    ) -> Result<ShuffleOutcome, EngineError> {
        let now = self.now();
        let mut inner = self.lock();
        let entry = assessment(&inner.state, actor, assessment_id)?;
        gate(entry, expected)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut records = Vec::new();
        let mut changed = Vec::new();
        for q in inner.state.questions_of(assessment_id) {
            let Answers::Options(options) = &q.answers else { continue };
            let mut shuffled = options.clone();
            shuffled.shuffle(&mut rng);
            if shuffled != *options {
                let next = Question { answers: Answers::Options(shuffled), version: q.version + 1, ..q.clone() };
                changed.push(q.id.clone());
                records.push(committed(assessment_id, next, Provenance::Shuffle, now));
            }
        }
        if records.is_empty() {
            return Ok(ShuffleOutcome { changed, revision: entry.revision });
        }
        records.push(bump(entry));
        inner.commit(records)?;
        Ok(ShuffleOutcome { changed, revision: inner.state.assessments[assessment_id].revision })
    }

    /// Questions across all of the teacher's courses, in course creation
    /// order, then assessment order, then position.
    pub fn search_questions(&self, actor: &TeacherId, query: &SearchQuery) -> Vec<SearchHit> {
        let inner = self.lock();
        let s = &inner.state;
        let keyword = query.keyword.as_deref().map(str::trim).filter(|k| !k.is_empty());
        let topic = query.topic.as_deref().map(str::trim).filter(|t| !t.is_empty());
        let mut hits = Vec::new();
        for course in s.course_order.iter().filter_map(|id| s.courses.get(id)) {
            if course.owner != *actor || query.course_id.as_ref().is_some_and(|c| *c != course.id) {
                continue;
            }
            for entry in course.assessment_ids.iter().filter_map(|id| s.assessments.get(id)) {
                for (position, q) in s.questions_of(&entry.assessment.id).into_iter().enumerate() {
                    let matches = keyword.is_none_or(|k| lower_contains(&q.stem, k))
                        && topic.is_none_or(|t| q.topics.iter().any(|x| lower_contains(x, t)))
                        && query.difficulty.is_none_or(|d| q.difficulty == d)
                        && query.format.is_none_or(|f| q.format == f);
                    if matches {
                        hits.push(SearchHit {
                            question: q.clone(),
                            assessment_id: entry.assessment.id.clone(),
                            course_id: course.id.clone(),
                            position,
                        });
                    }
                }
            }
        }
        hits
    }

    /// Copies a question from any of the teacher's assessments into another.
    pub fn import_question(
        &self,
        actor: &TeacherId,
        target: &AssessmentId,
        source: &QuestionId,
        position: Option<usize>,
        expected: Option<u64>,
    ) -> Result<QuestionChange, EngineError> {
        let draft = {
            let inner = self.lock();
            let s = &inner.state;
            match s.questions.get(source) {
                Some(e) if !e.deleted => match s.owner_of_question(source) {
                    Some(owner) if owner == actor => e.current().draft(),
                    _ => return Err(EngineError::NotOwner(source.to_string())),
                },
                _ => return Err(EngineError::UnknownQuestion(source.to_string())),
            }
        };
        self.add_question(actor, target, draft, position, Provenance::Import, expected)
    }
}

impl QuestionChange {
    fn with_revision(mut self, s: &crate::store::State) -> Self {
        if let Some(e) = s.questions.get(&self.question.id) {
            self.revision = s.assessments.get(&e.assessment_id).map_or(0, |a| a.revision);
        }
        self
    }
}
