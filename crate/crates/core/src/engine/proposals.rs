use chrono::{DateTime, Utc};
use serde::Serialize;

use super::{bump, committed, gate, question, Engine, Registration};
use crate::command::{CommandOrigin, CommandUsageEvent, ScopeTags, UsageOutcome};
use crate::diff::{compute_diff, Granularity};
use crate::error::EngineError;
use crate::model::{AssessmentId, CommandId, ProposalId, Question, QuestionId, QuestionPart, TeacherId};
use crate::proposal::{Decision, EditProposal, ProposalScope, ProposalState};
use crate::store::{Record, State};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Proposed {
    pub proposal: EditProposal,
    /// What became of the instruction in the command library.
    pub registration: Option<Registration>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolution {
    pub proposal: EditProposal,
    /// The question after resolution.
    pub question: Question,
    pub revision: u64,
}

pub(super) fn make_proposal(
    base: &Question,
    assessment_id: &AssessmentId,
    proposed: Question,
    scope: ProposalScope,
    instruction: &str,
    originating_command_id: Option<CommandId>,
    now: DateTime<Utc>,
) -> EditProposal {
    let diff = match scope.parts().as_slice() {
        [part] => compute_diff(&base.part_text(*part), &proposed.part_text(*part), Granularity::InlineWordDiff),
        _ => compute_diff(&base.full_text(), &proposed.full_text(), Granularity::SideBySide),
    };
    EditProposal {
        id: ProposalId::generate(),
        question_id: base.id.clone(),
        assessment_id: assessment_id.clone(),
        base_version: base.version,
        scope,
        instruction: instruction.to_owned(),
        proposed,
        diff,
        state: ProposalState::Pending,
        originating_command_id,
        created_at: now,
        resolved_at: None,
    }
}

fn proposal<'a>(s: &'a State, actor: &TeacherId, id: &ProposalId) -> Result<&'a EditProposal, EngineError> {
    match s.proposals.get(id) {
        Some(p) if s.owner_of_question(&p.question_id) == Some(actor) => Ok(p),
        _ => Err(EngineError::UnknownProposal(id.to_string())),
    }
}

impl Engine {
    fn base(&self, actor: &TeacherId, id: &QuestionId) -> Result<(AssessmentId, Question), EngineError> {
        let inner = self.lock();
        let e = question(&inner.state, actor, id)?;
        Ok((e.assessment_id.clone(), e.current().clone()))
    }

    fn store_proposal(&self, actor: &TeacherId, p: &EditProposal) -> Result<(), EngineError> {
        let mut inner = self.lock();
        question(&inner.state, actor, &p.question_id)?;
        inner.commit(vec![Record::ProposalCreated { proposal: p.clone() }])
    }

    /// Asks the model to rewrite one part. The instruction is registered as a
    /// command concurrently; that registration is best effort.
    pub async fn propose_part_edit(
        &self,
        actor: &TeacherId,
        id: &QuestionId,
        part: QuestionPart,
        instruction: &str,
    ) -> Result<Proposed, EngineError> {
        let instruction = instruction.trim();
        if instruction.is_empty() {
            return Err(EngineError::InvalidInstruction);
        }
        let tags = ScopeTags::single(part)
            .map_err(|_| EngineError::InvalidArgument(format!("{} is edited directly", part.label())))?;
        let (aid, base) = self.base(actor, id)?;
        let draft = base.draft();
        let (edit, registration) = tokio::join!(
            self.gateway.edit_part(&draft, part, instruction),
            self.register_command(actor, instruction, tags, CommandOrigin::FromLlmEditRequest),
        );
        let registration = registration.inspect_err(|e| tracing::warn!(error = %e, "instruction not registered")).ok();
        let proposed = base.with_part(part, edit?).map_err(|e| EngineError::InvalidContent(e.to_string()))?;
        proposed.validate().map_err(|e| EngineError::InvalidContent(e.to_string()))?;
        let p = make_proposal(&base, &aid, proposed, ProposalScope::Part(part), instruction, None, self.now());
        self.store_proposal(actor, &p)?;
        Ok(Proposed { proposal: p, registration })
    }

    /// Asks the model to revise the whole card. Difficulty and format are
    /// never changed by this path.
    pub async fn propose_question_edit(
        &self,
        actor: &TeacherId,
        id: &QuestionId,
        instruction: &str,
    ) -> Result<Proposed, EngineError> {
        let instruction = instruction.trim();
        if instruction.is_empty() {
            return Err(EngineError::InvalidInstruction);
        }
        let (aid, base) = self.base(actor, id)?;
        let draft = base.draft();
        let scope = QuestionPart::TAGGABLE.to_vec();
        let (edit, registration) = tokio::join!(
            self.gateway.edit_question(&draft, instruction, scope.clone()),
            self.register_command(actor, instruction, ScopeTags::all(), CommandOrigin::FromLlmEditRequest),
        );
        let registration = registration.inspect_err(|e| tracing::warn!(error = %e, "instruction not registered")).ok();
        let candidate = edit?.into_question(base.id.clone(), base.version);
        let proposed = base.take_parts(&candidate, &scope);
        proposed.validate().map_err(|e| EngineError::InvalidContent(e.to_string()))?;
        let p = make_proposal(&base, &aid, proposed, ProposalScope::WholeQuestion, instruction, None, self.now());
        self.store_proposal(actor, &p)?;
        Ok(Proposed { proposal: p, registration })
    }

    pub fn get_proposal(&self, actor: &TeacherId, id: &ProposalId) -> Result<EditProposal, EngineError> {
        Ok(proposal(&self.lock().state, actor, id)?.clone())
    }

    /// Proposals for one question, oldest first, optionally only pending ones.
    pub fn list_proposals(
        &self,
        actor: &TeacherId,
        question_id: &QuestionId,
        pending_only: bool,
    ) -> Result<Vec<EditProposal>, EngineError> {
        let inner = self.lock();
        question(&inner.state, actor, question_id)?;
        let mut out: Vec<EditProposal> = inner
            .state
            .proposals
            .values()
            .filter(|p| p.question_id == *question_id && (!pending_only || p.state == ProposalState::Pending))
            .cloned()
            .collect();
        out.sort_by(|a, b| a.created_at.cmp(&b.created_at).then(a.id.cmp(&b.id)));
        Ok(out)
    }

    /// Accepts or rejects a pending proposal. Accepting commits the proposed
    /// content as the next version, provided the question has not changed
    /// since the proposal was made. The `expected` revision is checked only
    /// for acceptance, which is the only outcome that changes content.
    pub fn resolve_proposal(
        &self,
        actor: &TeacherId,
        id: &ProposalId,
        decision: Decision,
        expected: Option<u64>,
    ) -> Result<Resolution, EngineError> {
        let now = self.now();
        let mut inner = self.lock();
        let s = &inner.state;
        let p = proposal(s, actor, id)?;
        if p.state != ProposalState::Pending {
            return Err(EngineError::AlreadyResolved(id.to_string()));
        }
        let entry = &s.questions[&p.question_id];
        let assessment = &s.assessments[&entry.assessment_id];
        let current = entry.current();
        let mut records = Vec::new();
        let state = match decision {
            Decision::Accept => {
                if entry.deleted {
                    return Err(EngineError::UnknownQuestion(p.question_id.to_string()));
                }
                gate(assessment, expected)?;
                if current.version != p.base_version {
                    return Err(EngineError::StaleProposal { base: p.base_version, current: current.version });
                }
                if !p.proposed.same_content(current) {
                    let next = Question { id: current.id.clone(), version: current.version + 1, ..p.proposed.clone() };
                    records.push(committed(&entry.assessment_id, next, p.provenance(), now));
                    records.push(bump(assessment));
                }
                ProposalState::Accepted
            }
            Decision::Reject => ProposalState::Rejected,
        };
        records.push(Record::ProposalResolved { proposal_id: id.clone(), state, at: now });
        if let Some(cid) = &p.originating_command_id {
            let outcome =
                if state == ProposalState::Accepted { UsageOutcome::Accepted } else { UsageOutcome::Rejected };
            records.push(Record::CommandUsage {
                event: CommandUsageEvent {
                    command_id: cid.clone(),
                    question_id: p.question_id.clone(),
                    proposal_id: id.clone(),
                    outcome,
                    timestamp: now,
                },
            });
        }
        let (qid, aid) = (p.question_id.clone(), entry.assessment_id.clone());
        inner.commit(records)?;
        let s = &inner.state;
        Ok(Resolution {
            proposal: s.proposals[id].clone(),
            question: s.questions[&qid].current().clone(),
            revision: s.assessments[&aid].revision,
        })
    }
}
