//! Pending LLM revisions awaiting review.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::diff::DiffDocument;
use crate::model::{AssessmentId, CommandId, ProposalId, Provenance, Question, QuestionId, QuestionPart};

/// What a proposal may change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalScope {
    Part(QuestionPart),
    /// The scope tags of the command that produced it.
    Parts(Vec<QuestionPart>),
    WholeQuestion,
}

impl ProposalScope {
    pub fn parts(&self) -> Vec<QuestionPart> {
        match self {
            ProposalScope::Part(p) => vec![*p],
            ProposalScope::Parts(p) => p.clone(),
            ProposalScope::WholeQuestion => QuestionPart::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalState {
    Pending,
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditProposal {
    pub id: ProposalId,
    pub question_id: QuestionId,
    pub assessment_id: AssessmentId,
    pub base_version: u32,
    pub scope: ProposalScope,
    pub instruction: String,
    pub proposed: Question,
    pub diff: DiffDocument,
    pub state: ProposalState,
    pub originating_command_id: Option<CommandId>,
    pub created_at: DateTime<Utc>,
    pub resolved_at: Option<DateTime<Utc>>,
}

impl EditProposal {
    /// Provenance recorded when this proposal is accepted.
    pub fn provenance(&self) -> Provenance {
        match (&self.originating_command_id, &self.scope) {
            (Some(_), _) => Provenance::CommandApply,
            (None, ProposalScope::Part(_)) => Provenance::LlmPartEdit,
            (None, _) => Provenance::LlmQuestionEdit,
        }
    }
}
