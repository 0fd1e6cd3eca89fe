use std::collections::HashSet;

use serde::Serialize;

use super::proposals::make_proposal;
use super::{command, question, Engine, Registration};
use crate::command::{
    helpfulness_percent, rank_commands, CommandOrigin, CommandSort, CommandUsageEvent, EditCommand, ScopeTags,
    UsageOutcome,
};
use crate::error::EngineError;
use crate::model::{CommandId, Question, QuestionId, QuestionPart, TeacherId};
use crate::proposal::{EditProposal, ProposalScope};
use crate::store::{Record, State};

/// A command with its derived helpfulness score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandView {
    #[serde(flatten)]
    pub command: EditCommand,
    pub helpfulness: f64,
    pub helpfulness_percent: u32,
}

impl From<&EditCommand> for CommandView {
    fn from(c: &EditCommand) -> Self {
        Self {
            command: c.clone(),
            helpfulness: c.helpfulness(),
            helpfulness_percent: helpfulness_percent(c.accepted, c.rejected),
        }
    }
}

/// Per-question result of applying a command.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ApplyItem {
    Proposed { question_id: QuestionId, proposal: Box<EditProposal> },
    Failed { question_id: QuestionId, code: String, error: String },
}

impl ApplyItem {
    pub fn question_id(&self) -> &QuestionId {
        match self {
            ApplyItem::Proposed { question_id, .. } | ApplyItem::Failed { question_id, .. } => question_id,
        }
    }

    pub fn proposal(&self) -> Option<&EditProposal> {
        match self {
            ApplyItem::Proposed { proposal, .. } => Some(proposal),
            ApplyItem::Failed { .. } => None,
        }
    }

    fn failed(question_id: &QuestionId, e: &EngineError) -> Self {
        ApplyItem::Failed { question_id: question_id.clone(), code: e.code().to_owned(), error: e.to_string() }
    }
}

fn owned_commands<'a>(s: &'a State, actor: &'a TeacherId) -> impl Iterator<Item = &'a EditCommand> + 'a {
    s.command_order.iter().filter_map(|id| s.commands.get(id)).filter(move |c| c.owner == *actor)
}

impl Engine {
    /// Adds `text` to the teacher's library unless an equivalent command
    /// exists. Equivalence is judged by the model against the existing
    /// texts; commands registered while the judge runs are judged in a
    /// further round, so two equivalent commands never both get added.
    pub async fn register_command(
        &self,
        actor: &TeacherId,
        text: &str,
        tags: ScopeTags,
        origin: CommandOrigin,
    ) -> Result<Registration, EngineError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(EngineError::InvalidInstruction);
        }
        let mut judged: HashSet<CommandId> = HashSet::new();
        loop {
            let fresh: Vec<(CommandId, String)> = {
                let mut inner = self.lock();
                if !inner.state.teachers.contains_key(actor) {
                    return Err(EngineError::UnknownTeacher(actor.to_string()));
                }
                let fresh: Vec<_> = owned_commands(&inner.state, actor)
                    .filter(|c| !judged.contains(&c.id))
                    .map(|c| (c.id.clone(), c.text.clone()))
                    .collect();
                if let Some((id, _)) = fresh.iter().find(|(_, t)| t.to_lowercase() == text.to_lowercase()) {
                    return Ok(Registration::MergedInto(id.clone()));
                }
                if fresh.is_empty() {
                    let command = EditCommand {
                        id: CommandId::generate(),
                        owner: actor.clone(),
                        text: text.to_owned(),
                        scope_tags: tags,
                        uses: 0,
                        accepted: 0,
                        rejected: 0,
                        origin,
                        created_at: self.now(),
                    };
                    let id = command.id.clone();
                    inner.commit(vec![Record::CommandRegistered { command }])?;
                    return Ok(Registration::Added(id));
                }
                fresh
            };
            let texts = fresh.iter().map(|(_, t)| t.clone()).collect();
            match self.gateway.judge_similarity(text, texts).await {
                Ok(Some(i)) if i < fresh.len() => return Ok(Registration::MergedInto(fresh[i].0.clone())),
                Ok(_) => {}
                Err(e) => tracing::warn!(error = %e, "similarity judge failed; treating command as new"),
            }
            judged.extend(fresh.into_iter().map(|(id, _)| id));
        }
    }

    pub fn list_commands(&self, actor: &TeacherId, sort: CommandSort, keyword: Option<&str>) -> Vec<CommandView> {
        let inner = self.lock();
        let mine: Vec<&EditCommand> = owned_commands(&inner.state, actor).collect();
        rank_commands(&mine, sort, keyword).into_iter().map(CommandView::from).collect()
    }

    pub fn get_command(&self, actor: &TeacherId, id: &CommandId) -> Result<CommandView, EngineError> {
        Ok(command(&self.lock().state, actor, id)?.into())
    }

    pub fn set_scope_tags(
        &self,
        actor: &TeacherId,
        id: &CommandId,
        tags: Vec<QuestionPart>,
    ) -> Result<CommandView, EngineError> {
        let tags = ScopeTags::new(tags)?;
        let mut inner = self.lock();
        command(&inner.state, actor, id)?;
        inner.commit(vec![Record::ScopeTagsSet { command_id: id.clone(), tags }])?;
        Ok((&inner.state.commands[id]).into())
    }

    /// The command's usage log, oldest first.
    pub fn command_usage(&self, actor: &TeacherId, id: &CommandId) -> Result<Vec<CommandUsageEvent>, EngineError> {
        let inner = self.lock();
        command(&inner.state, actor, id)?;
        Ok(inner.state.usage.iter().filter(|e| e.command_id == *id).cloned().collect())
    }

    /// Runs the command on every target question in parallel. Each success
    /// becomes a pending proposal that can only change the command's scope
    /// tags; failures are reported per question without affecting the rest.
    pub async fn apply_command(
        &self,
        actor: &TeacherId,
        id: &CommandId,
        targets: &[QuestionId],
    ) -> Result<Vec<ApplyItem>, EngineError> {
        if targets.is_empty() {
            return Err(EngineError::EmptyTargetList);
        }
        let (cmd, bases) = {
            let inner = self.lock();
            let s = &inner.state;
            let cmd = command(s, actor, id)?.clone();
            let mut seen = HashSet::new();
            let mut bases = Vec::with_capacity(targets.len());
            for t in targets {
                if !seen.insert(t) {
                    return Err(EngineError::InvalidArgument(format!("question {t} is listed twice")));
                }
                let e = question(s, actor, t)?;
                bases.push((e.assessment_id.clone(), e.current().clone()));
            }
            (cmd, bases)
        };
        let tags: Vec<QuestionPart> = cmd.scope_tags.iter().copied().collect();
        let drafts: Vec<_> = bases.iter().map(|(_, q)| q.draft()).collect();
        let edits =
            futures::future::join_all(drafts.iter().map(|d| self.gateway.edit_question(d, &cmd.text, tags.clone())))
                .await;

        let now = self.now();
        let mut items = Vec::with_capacity(bases.len());
        for ((aid, base), edit) in bases.iter().zip(edits) {
            let item = edit.map_err(EngineError::from).and_then(|draft| {
                let candidate: Question = draft.into_question(base.id.clone(), base.version);
                let proposed = base.take_parts(&candidate, &tags);
                proposed.validate().map_err(|e| EngineError::InvalidContent(e.to_string()))?;
                Ok(make_proposal(
                    base,
                    aid,
                    proposed,
                    ProposalScope::Parts(tags.clone()),
                    &cmd.text,
                    Some(cmd.id.clone()),
                    now,
                ))
            });
            items.push(match item {
                Ok(p) => ApplyItem::Proposed { question_id: base.id.clone(), proposal: Box::new(p) },
                Err(e) => ApplyItem::failed(&base.id, &e),
            });
        }

        let mut inner = self.lock();
        let mut records = Vec::new();
        for item in &mut items {
            let ApplyItem::Proposed { question_id, proposal } = item else { continue };
            if let Err(e) = question(&inner.state, actor, question_id) {
                *item = ApplyItem::failed(&question_id.clone(), &e);
                continue;
            }
            records.push(Record::CommandUsage {
                event: CommandUsageEvent {
                    command_id: cmd.id.clone(),
                    question_id: question_id.clone(),
                    proposal_id: proposal.id.clone(),
                    outcome: UsageOutcome::Applied,
                    timestamp: now,
                },
            });
            records.push(Record::ProposalCreated { proposal: (**proposal).clone() });
        }
        inner.commit(records)?;
        Ok(items)
    }
}
