//! The authoring engine: every operation on teachers, courses, assessments,
//! questions, proposals and commands.
//!
//! Each mutation builds a batch of records under the state lock, checks
//! ownership and the caller's expected revision, appends the batch to the
//! journal and then applies it. LLM calls happen outside the lock on a
//! snapshot; their results are re-validated when committed.

mod commands;
mod exchange;
mod generation;
mod proposals;
mod questions;

use std::sync::{Arc, Mutex, MutexGuard};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clock::{Clock, SystemClock};
use crate::command::EditCommand;
use crate::error::EngineError;
use crate::export::{MathRenderer, SvgMathRenderer};
use crate::llm::Gateway;
use crate::model::{
    Assessment, AssessmentId, CommandId, CompositionSummary, Course, CourseId, Provenance, Question, QuestionId,
    QuestionVersion, Teacher, TeacherId,
};
use crate::store::{AssessmentEntry, Batch, Journal, MemoryJournal, QuestionEntry, Record, Session, State};

pub use commands::{ApplyItem, CommandView};
pub use exchange::ImportMode;
pub use generation::Generated;
pub use proposals::{Proposed, Resolution};
pub use questions::{ManualEditOutcome, QuestionChange, SearchHit, SearchQuery, ShuffleOutcome};

/// Default lifetime of a bearer session.
pub const SESSION_TTL_HOURS: i64 = 12;

#[derive(Debug, Clone, Serialize)]
pub struct IssuedSession {
    /// Bearer token. Only its digest is stored.
    pub token: String,
    pub teacher_id: TeacherId,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssessmentView {
    pub assessment: Assessment,
    pub revision: u64,
    pub questions: Vec<Question>,
    pub composition: CompositionSummary,
}

/// Outcome of registering a command text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "command_id", rename_all = "snake_case")]
pub enum Registration {
    Added(CommandId),
    /// An equivalent command already existed; nothing was added.
    MergedInto(CommandId),
}

impl Registration {
    pub fn command_id(&self) -> &CommandId {
        match self {
            Registration::Added(id) | Registration::MergedInto(id) => id,
        }
    }
}

struct Inner {
    state: State,
    journal: Box<dyn Journal>,
    seq: u64,
}

impl Inner {
    fn commit(&mut self, records: Vec<Record>) -> Result<(), EngineError> {
        if records.is_empty() {
            return Ok(());
        }
        let batch = Batch { seq: self.seq + 1, records };
        self.journal.append(&batch).map_err(|e| EngineError::Storage(e.to_string()))?;
        self.seq = batch.seq;
        for r in &batch.records {
            self.state
                .apply(r)
                .map_err(|e| EngineError::Storage(format!("batch {} diverged from state: {e}", batch.seq)))?;
        }
        Ok(())
    }
}

pub struct Engine {
    inner: Mutex<Inner>,
    gateway: Gateway,
    clock: Arc<dyn Clock>,
    math: Arc<dyn MathRenderer>,
    session_ttl: chrono::Duration,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("gateway", &self.gateway).finish_non_exhaustive()
    }
}

impl Engine {
    /// Replays `journal` and serves from the resulting state.
    pub fn open(mut journal: Box<dyn Journal>, gateway: Gateway) -> Result<Self, EngineError> {
        let batches = journal.load().map_err(|e| EngineError::Storage(e.to_string()))?;
        let mut state = State::default();
        for b in &batches {
            for r in &b.records {
                state.apply(r).map_err(|e| EngineError::Storage(format!("replaying batch {}: {e}", b.seq)))?;
            }
        }
        let seq = batches.last().map_or(0, |b| b.seq);
        Ok(Self {
            inner: Mutex::new(Inner { state, journal, seq }),
            gateway,
            clock: Arc::new(SystemClock),
            math: Arc::new(SvgMathRenderer),
            session_ttl: chrono::Duration::hours(SESSION_TTL_HOURS),
        })
    }

    /// Fresh engine over an in-memory journal.
    pub fn in_memory(gateway: Gateway) -> Self {
        Self::open(Box::new(MemoryJournal::new()), gateway).expect("an empty journal replays")
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_math_renderer(mut self, math: Arc<dyn MathRenderer>) -> Self {
        self.math = math;
        self
    }

    pub fn with_session_ttl(mut self, ttl: chrono::Duration) -> Self {
        self.session_ttl = ttl;
        self
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    /// Read access to the projected state.
    pub fn read<R>(&self, f: impl FnOnce(&State) -> R) -> R {
        f(&self.lock().state)
    }

    /// Number of batches committed so far.
    pub fn journal_seq(&self) -> u64 {
        self.lock().seq
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    // Teachers and sessions

    pub fn register_teacher(&self, display_name: &str) -> Result<Teacher, EngineError> {
        let display_name = display_name.trim();
        if display_name.is_empty() {
            return Err(EngineError::InvalidArgument("display name is empty".into()));
        }
        let teacher = Teacher { id: TeacherId::generate(), display_name: display_name.to_owned() };
        self.lock().commit(vec![Record::TeacherRegistered { teacher: teacher.clone() }])?;
        Ok(teacher)
    }

    pub fn issue_session(&self, teacher_id: &TeacherId) -> Result<IssuedSession, EngineError> {
        let mut inner = self.lock();
        if !inner.state.teachers.contains_key(teacher_id) {
            return Err(EngineError::UnknownTeacher(teacher_id.to_string()));
        }
        let token = format!("{}{}", uuid::Uuid::new_v4().simple(), uuid::Uuid::new_v4().simple());
        let expires_at = self.now() + self.session_ttl;
        let session = Session { token_digest: token_digest(&token), teacher_id: teacher_id.clone(), expires_at };
        inner.commit(vec![Record::SessionIssued { session }])?;
        Ok(IssuedSession { token, teacher_id: teacher_id.clone(), expires_at })
    }

    pub fn authenticate(&self, token: &str) -> Result<TeacherId, EngineError> {
        let inner = self.lock();
        match inner.state.sessions.get(&token_digest(token)) {
            Some(s) if s.expires_at > self.now() => Ok(s.teacher_id.clone()),
            _ => Err(EngineError::Unauthorized),
        }
    }

    pub fn revoke_session(&self, token: &str) -> Result<(), EngineError> {
        let mut inner = self.lock();
        let digest = token_digest(token);
        if !inner.state.sessions.contains_key(&digest) {
            return Err(EngineError::Unauthorized);
        }
        inner.commit(vec![Record::SessionRevoked { token_digest: digest }])
    }

    // Courses and assessments

    pub fn create_course(&self, actor: &TeacherId, name: &str) -> Result<Course, EngineError> {
        let name = non_empty(name, "course name")?;
        let mut inner = self.lock();
        if !inner.state.teachers.contains_key(actor) {
            return Err(EngineError::UnknownTeacher(actor.to_string()));
        }
        let course = Course { id: CourseId::generate(), name, owner: actor.clone(), assessment_ids: vec![] };
        inner.commit(vec![Record::CourseCreated { course: course.clone() }])?;
        Ok(course)
    }

    pub fn list_courses(&self, actor: &TeacherId) -> Vec<Course> {
        let inner = self.lock();
        let s = &inner.state;
        s.course_order.iter().filter_map(|id| s.courses.get(id)).filter(|c| c.owner == *actor).cloned().collect()
    }

    pub fn get_course(&self, actor: &TeacherId, id: &CourseId) -> Result<Course, EngineError> {
        Ok(course(&self.lock().state, actor, id)?.clone())
    }

    pub fn create_assessment(
        &self,
        actor: &TeacherId,
        course_id: &CourseId,
        name: &str,
    ) -> Result<Assessment, EngineError> {
        let name = non_empty(name, "assessment name")?;
        let mut inner = self.lock();
        course(&inner.state, actor, course_id)?;
        let assessment =
            Assessment { id: AssessmentId::generate(), course_id: course_id.clone(), name, question_ids: vec![] };
        inner.commit(vec![Record::AssessmentCreated { assessment: assessment.clone() }])?;
        Ok(assessment)
    }

    pub fn list_assessments(
        &self,
        actor: &TeacherId,
        course_id: &CourseId,
    ) -> Result<Vec<AssessmentView>, EngineError> {
        let inner = self.lock();
        let s = &inner.state;
        let c = course(s, actor, course_id)?;
        Ok(c.assessment_ids.iter().filter_map(|id| s.assessments.get(id)).map(|e| view(s, e)).collect())
    }

    pub fn get_assessment(&self, actor: &TeacherId, id: &AssessmentId) -> Result<AssessmentView, EngineError> {
        let inner = self.lock();
        let entry = assessment(&inner.state, actor, id)?;
        Ok(view(&inner.state, entry))
    }

    pub fn revision(&self, actor: &TeacherId, id: &AssessmentId) -> Result<u64, EngineError> {
        Ok(assessment(&self.lock().state, actor, id)?.revision)
    }

    pub fn get_composition(&self, actor: &TeacherId, id: &AssessmentId) -> Result<CompositionSummary, EngineError> {
        let inner = self.lock();
        assessment(&inner.state, actor, id)?;
        Ok(CompositionSummary::of(inner.state.questions_of(id)))
    }
}

pub(crate) fn token_digest(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

fn non_empty(text: &str, what: &str) -> Result<String, EngineError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(EngineError::InvalidArgument(format!("{what} is empty")));
    }
    Ok(t.to_owned())
}

fn view(s: &State, entry: &AssessmentEntry) -> AssessmentView {
    let questions: Vec<Question> = s.questions_of(&entry.assessment.id).into_iter().cloned().collect();
    AssessmentView {
        assessment: entry.assessment.clone(),
        revision: entry.revision,
        composition: CompositionSummary::of(&questions),
        questions,
    }
}

// Ownership-checked lookups. Entities of other teachers are reported as
// unknown so their existence does not leak.

fn course<'a>(s: &'a State, actor: &TeacherId, id: &CourseId) -> Result<&'a Course, EngineError> {
    s.courses.get(id).filter(|c| c.owner == *actor).ok_or_else(|| EngineError::UnknownCourse(id.to_string()))
}

fn assessment<'a>(s: &'a State, actor: &TeacherId, id: &AssessmentId) -> Result<&'a AssessmentEntry, EngineError> {
    match s.assessments.get(id) {
        Some(e) if s.owner_of_assessment(id) == Some(actor) => Ok(e),
        _ => Err(EngineError::UnknownAssessment(id.to_string())),
    }
}

/// A live (not deleted) question owned by `actor`.
fn question<'a>(s: &'a State, actor: &TeacherId, id: &QuestionId) -> Result<&'a QuestionEntry, EngineError> {
    match s.questions.get(id) {
        Some(e) if !e.deleted && s.owner_of_question(id) == Some(actor) => Ok(e),
        _ => Err(EngineError::UnknownQuestion(id.to_string())),
    }
}

fn command<'a>(s: &'a State, actor: &TeacherId, id: &CommandId) -> Result<&'a EditCommand, EngineError> {
    s.commands.get(id).filter(|c| c.owner == *actor).ok_or_else(|| EngineError::UnknownCommand(id.to_string()))
}

/// Optimistic concurrency check against the assessment revision.
fn gate(entry: &AssessmentEntry, expected: Option<u64>) -> Result<(), EngineError> {
    match expected {
        Some(e) if e != entry.revision => Err(EngineError::VersionConflict { expected: e, actual: entry.revision }),
        _ => Ok(()),
    }
}

fn bump(entry: &AssessmentEntry) -> Record {
    Record::RevisionBumped { assessment_id: entry.assessment.id.clone(), revision: entry.revision + 1 }
}

fn committed(assessment_id: &AssessmentId, snapshot: Question, provenance: Provenance, at: DateTime<Utc>) -> Record {
    Record::QuestionCommitted {
        assessment_id: assessment_id.clone(),
        version: QuestionVersion {
            question_id: snapshot.id.clone(),
            version: snapshot.version,
            snapshot,
            timestamp: at,
            provenance,
        },
    }
}
