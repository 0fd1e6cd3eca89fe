//! In-memory projection of the journal. `apply` is the only way state
//! changes, both live and during replay.

use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::command::{CommandUsageEvent, EditCommand, ScopeTags};
use crate::llm::Document;
use crate::model::{
    Assessment, AssessmentId, CommandId, Course, CourseId, ProposalId, Provenance, Question, QuestionId,
    QuestionVersion, Teacher, TeacherId,
};
use crate::proposal::{EditProposal, ProposalState};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Session {
    /// SHA-256 of the bearer token; the token itself is never stored.
    pub token_digest: String,
    pub teacher_id: TeacherId,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestPurpose {
    Generate,
    Import,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestedDocument {
    pub owner: TeacherId,
    pub assessment_id: AssessmentId,
    pub purpose: IngestPurpose,
    pub digest: String,
    pub document: Document,
    pub received_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Record {
    TeacherRegistered { teacher: Teacher },
    SessionIssued { session: Session },
    SessionRevoked { token_digest: String },
    CourseCreated { course: Course },
    AssessmentCreated { assessment: Assessment },
    QuestionCommitted { assessment_id: AssessmentId, version: QuestionVersion },
    QuestionOrderSet { assessment_id: AssessmentId, question_ids: Vec<QuestionId> },
    QuestionDeleted { assessment_id: AssessmentId, question_id: QuestionId },
    RevisionBumped { assessment_id: AssessmentId, revision: u64 },
    ProposalCreated { proposal: EditProposal },
    ProposalResolved { proposal_id: ProposalId, state: ProposalState, at: DateTime<Utc> },
    CommandRegistered { command: EditCommand },
    ScopeTagsSet { command_id: CommandId, tags: ScopeTags },
    CommandUsage { event: CommandUsageEvent },
    DocumentIngested { document: IngestedDocument },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("record does not fit current state: {0}")]
pub struct ApplyError(pub String);

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionEntry {
    pub assessment_id: AssessmentId,
    pub versions: Vec<QuestionVersion>,
    pub deleted: bool,
}

impl QuestionEntry {
    pub fn current(&self) -> &Question {
        &self.versions.last().expect("entries hold at least one version").snapshot
    }

    /// Versions whose content is still "live" for undo purposes: each Undo
    /// version pops the one it reverted, so repeated undo walks backwards.
    pub fn undo_stack(&self) -> Vec<u32> {
        let mut stack = Vec::new();
        for v in &self.versions {
            if v.provenance == Provenance::Undo {
                stack.pop();
            } else {
                stack.push(v.version);
            }
        }
        stack
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentEntry {
    pub assessment: Assessment,
    pub revision: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct State {
    pub teachers: BTreeMap<TeacherId, Teacher>,
    pub sessions: HashMap<String, Session>,
    pub courses: BTreeMap<CourseId, Course>,
    /// Creation order, used for listing and search ordering.
    pub course_order: Vec<CourseId>,
    pub assessments: BTreeMap<AssessmentId, AssessmentEntry>,
    pub questions: BTreeMap<QuestionId, QuestionEntry>,
    pub proposals: BTreeMap<ProposalId, EditProposal>,
    pub commands: BTreeMap<CommandId, EditCommand>,
    /// Registration order; the final tie-break when ranking.
    pub command_order: Vec<CommandId>,
    pub usage: Vec<CommandUsageEvent>,
    pub documents: Vec<IngestedDocument>,
}

fn missing(what: &str, id: impl std::fmt::Display) -> ApplyError {
    ApplyError(format!("unknown {what} {id}"))
}

impl State {
    pub fn apply(&mut self, record: &Record) -> Result<(), ApplyError> {
        match record {
            Record::TeacherRegistered { teacher } => {
                if self.teachers.contains_key(&teacher.id) {
                    return Err(ApplyError(format!("teacher {} exists", teacher.id)));
                }
                self.teachers.insert(teacher.id.clone(), teacher.clone());
            }
            Record::SessionIssued { session } => {
                if !self.teachers.contains_key(&session.teacher_id) {
                    return Err(missing("teacher", &session.teacher_id));
                }
                self.sessions.insert(session.token_digest.clone(), session.clone());
            }
            Record::SessionRevoked { token_digest } => {
                self.sessions.remove(token_digest);
            }
            Record::CourseCreated { course } => {
                if !self.teachers.contains_key(&course.owner) {
                    return Err(missing("teacher", &course.owner));
                }
                if self.courses.contains_key(&course.id) {
                    return Err(ApplyError(format!("course {} exists", course.id)));
                }
                self.course_order.push(course.id.clone());
                self.courses.insert(course.id.clone(), course.clone());
            }
            Record::AssessmentCreated { assessment } => {
                if self.assessments.contains_key(&assessment.id) {
                    return Err(ApplyError(format!("assessment {} exists", assessment.id)));
                }
                let course = self
                    .courses
                    .get_mut(&assessment.course_id)
                    .ok_or_else(|| missing("course", &assessment.course_id))?;
                course.assessment_ids.push(assessment.id.clone());
                let entry = AssessmentEntry {
                    assessment: Assessment { question_ids: vec![], ..assessment.clone() },
                    revision: 0,
                };
                self.assessments.insert(assessment.id.clone(), entry);
            }
            Record::QuestionCommitted { assessment_id, version } => {
                if !self.assessments.contains_key(assessment_id) {
                    return Err(missing("assessment", assessment_id));
                }
                if version.snapshot.id != version.question_id || version.snapshot.version != version.version {
                    return Err(ApplyError(format!(
                        "version {} of {} is inconsistent",
                        version.version, version.question_id
                    )));
                }
                match self.questions.get_mut(&version.question_id) {
                    Some(entry) => {
                        let next = entry.current().version + 1;
                        if version.version != next || entry.assessment_id != *assessment_id {
                            return Err(ApplyError(format!("expected version {next} of {}", version.question_id)));
                        }
                        entry.versions.push(version.clone());
                    }
                    None => {
                        if version.version != 1 {
                            return Err(ApplyError(format!(
                                "question {} must start at version 1",
                                version.question_id
                            )));
                        }
                        let entry = QuestionEntry {
                            assessment_id: assessment_id.clone(),
                            versions: vec![version.clone()],
                            deleted: false,
                        };
                        self.questions.insert(version.question_id.clone(), entry);
                    }
                }
            }
            Record::QuestionOrderSet { assessment_id, question_ids } => {
                for q in question_ids {
                    match self.questions.get(q) {
                        Some(e) if e.assessment_id == *assessment_id && !e.deleted => {}
                        _ => return Err(missing("question", q)),
                    }
                }
                let entry =
                    self.assessments.get_mut(assessment_id).ok_or_else(|| missing("assessment", assessment_id))?;
                entry.assessment.question_ids = question_ids.clone();
            }
            Record::QuestionDeleted { assessment_id, question_id } => {
                let entry =
                    self.assessments.get_mut(assessment_id).ok_or_else(|| missing("assessment", assessment_id))?;
                let q = self.questions.get_mut(question_id).ok_or_else(|| missing("question", question_id))?;
                entry.assessment.question_ids.retain(|id| id != question_id);
                q.deleted = true;
            }
            Record::RevisionBumped { assessment_id, revision } => {
                let entry =
                    self.assessments.get_mut(assessment_id).ok_or_else(|| missing("assessment", assessment_id))?;
                if *revision != entry.revision + 1 {
                    return Err(ApplyError(format!("revision {revision} does not follow {}", entry.revision)));
                }
                entry.revision = *revision;
            }
            Record::ProposalCreated { proposal } => {
                if !self.questions.contains_key(&proposal.question_id) {
                    return Err(missing("question", &proposal.question_id));
                }
                self.proposals.insert(proposal.id.clone(), proposal.clone());
            }
            Record::ProposalResolved { proposal_id, state, at } => {
                let p = self.proposals.get_mut(proposal_id).ok_or_else(|| missing("proposal", proposal_id))?;
                if p.state != ProposalState::Pending || *state == ProposalState::Pending {
                    return Err(ApplyError(format!("proposal {proposal_id} cannot move to {state:?}")));
                }
                p.state = *state;
                p.resolved_at = Some(*at);
            }
            Record::CommandRegistered { command } => {
                if self.commands.contains_key(&command.id) {
                    return Err(ApplyError(format!("command {} exists", command.id)));
                }
                self.command_order.push(command.id.clone());
                self.commands.insert(command.id.clone(), command.clone());
            }
            Record::ScopeTagsSet { command_id, tags } => {
                let c = self.commands.get_mut(command_id).ok_or_else(|| missing("command", command_id))?;
                c.scope_tags = tags.clone();
            }
            Record::CommandUsage { event } => {
                let c =
                    self.commands.get_mut(&event.command_id).ok_or_else(|| missing("command", &event.command_id))?;
                let mut m = c.metrics();
                m.record(event.outcome);
                (c.uses, c.accepted, c.rejected) = (m.uses, m.accepted, m.rejected);
                self.usage.push(event.clone());
            }
            Record::DocumentIngested { document } => self.documents.push(document.clone()),
        }
        Ok(())
    }

    pub fn owner_of_course(&self, id: &CourseId) -> Option<&TeacherId> {
        self.courses.get(id).map(|c| &c.owner)
    }

    pub fn owner_of_assessment(&self, id: &AssessmentId) -> Option<&TeacherId> {
        self.assessments.get(id).and_then(|a| self.owner_of_course(&a.assessment.course_id))
    }

    pub fn owner_of_question(&self, id: &QuestionId) -> Option<&TeacherId> {
        self.questions.get(id).and_then(|q| self.owner_of_assessment(&q.assessment_id))
    }

    /// Current questions of an assessment, in order.
    pub fn questions_of(&self, id: &AssessmentId) -> Vec<&Question> {
        self.assessments
            .get(id)
            .map(|a| {
                a.assessment
                    .question_ids
                    .iter()
                    .filter_map(|q| self.questions.get(q))
                    .map(QuestionEntry::current)
                    .collect()
            })
            .unwrap_or_default()
    }
}
