//! Reusable edit commands and their usage metrics.

use std::collections::{BTreeSet, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CommandId, ProposalId, QuestionId, QuestionPart, TeacherId};

/// Beta(1, 1) prior: a command nobody has reviewed scores exactly 0.5.
pub const PRIOR_ALPHA: u64 = 1;
pub const PRIOR_BETA: u64 = 1;

/// Posterior mean of the acceptance probability after `accepted` successes
/// and `rejected` failures.
pub fn helpfulness(accepted: u64, rejected: u64) -> f64 {
    let (num, den) = posterior(accepted, rejected);
    num as f64 / den as f64
}

/// Whole-percent display value, rounded half up in exact arithmetic.
pub fn helpfulness_percent(accepted: u64, rejected: u64) -> u32 {
    let (num, den) = posterior(accepted, rejected);
    ((200 * num + den) / (2 * den)) as u32
}

fn posterior(accepted: u64, rejected: u64) -> (u128, u128) {
    let num = accepted as u128 + PRIOR_ALPHA as u128;
    (num, num + rejected as u128 + PRIOR_BETA as u128)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScopeError {
    #[error("scope must name at least one question part")]
    EmptyScope,
    #[error("{0:?} cannot be a command scope")]
    InvalidTag(QuestionPart),
}

/// Non-empty set of taggable question parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<QuestionPart>", into = "Vec<QuestionPart>")]
pub struct ScopeTags(BTreeSet<QuestionPart>);

impl ScopeTags {
    pub fn new(tags: impl IntoIterator<Item = QuestionPart>) -> Result<Self, ScopeError> {
        let set: BTreeSet<_> = tags.into_iter().collect();
        if set.is_empty() {
            return Err(ScopeError::EmptyScope);
        }
        if let Some(bad) = set.iter().find(|p| !p.is_taggable()) {
            return Err(ScopeError::InvalidTag(*bad));
        }
        Ok(Self(set))
    }

    pub fn all() -> Self {
        Self(QuestionPart::TAGGABLE.into_iter().collect())
    }

    pub fn single(part: QuestionPart) -> Result<Self, ScopeError> {
        Self::new([part])
    }

    pub fn contains(&self, part: QuestionPart) -> bool {
        self.0.contains(&part)
    }

    pub fn iter(&self) -> impl Iterator<Item = &QuestionPart> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<QuestionPart>> for ScopeTags {
    type Error = ScopeError;

    fn try_from(v: Vec<QuestionPart>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ScopeTags> for Vec<QuestionPart> {
    fn from(s: ScopeTags) -> Self {
        s.0.into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandOrigin {
    InferredFromManual,
    FromLlmEditRequest,
    TypedByUser,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditCommand {
    pub id: CommandId,
    pub owner: TeacherId,
    pub text: String,
    pub scope_tags: ScopeTags,
    pub uses: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub origin: CommandOrigin,
    pub created_at: DateTime<Utc>,
}

impl EditCommand {
    pub fn helpfulness(&self) -> f64 {
        helpfulness(self.accepted, self.rejected)
    }

    pub fn metrics(&self) -> CommandMetrics {
        CommandMetrics { uses: self.uses, accepted: self.accepted, rejected: self.rejected }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UsageOutcome {
    Applied,
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandUsageEvent {
    pub command_id: CommandId,
    pub question_id: QuestionId,
    pub proposal_id: ProposalId,
    pub outcome: UsageOutcome,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandMetrics {
    pub uses: u64,
    pub accepted: u64,
    pub rejected: u64,
}

impl CommandMetrics {
    pub fn record(&mut self, outcome: UsageOutcome) {
        match outcome {
            UsageOutcome::Applied => self.uses += 1,
            UsageOutcome::Accepted => self.accepted += 1,
            UsageOutcome::Rejected => self.rejected += 1,
        }
    }
}

/// Recomputes every command's counters from the usage log alone.
pub fn replay_metrics<'a>(
    events: impl IntoIterator<Item = &'a CommandUsageEvent>,
) -> HashMap<CommandId, CommandMetrics> {
    let mut out: HashMap<CommandId, CommandMetrics> = HashMap::new();
    for e in events {
        out.entry(e.command_id.clone()).or_default().record(e.outcome);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandSort {
    #[default]
    ByHelpfulness,
    ByUses,
}

/// Filters by case-insensitive substring and sorts descending by the chosen
/// metric. Ties go to the newer command; `commands` must be in creation order
/// so equal timestamps still resolve newest-first.
pub fn rank_commands<'a>(
    commands: &[&'a EditCommand],
    sort: CommandSort,
    keyword: Option<&str>,
) -> Vec<&'a EditCommand> {
    let needle = keyword.map(str::to_lowercase).filter(|k| !k.is_empty());
    let mut picked: Vec<(usize, &EditCommand)> = commands
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, c)| needle.as_ref().is_none_or(|k| c.text.to_lowercase().contains(k.as_str())))
        .collect();
    picked.sort_by(|(ia, a), (ib, b)| {
        let by_metric = match sort {
            CommandSort::ByHelpfulness => b.helpfulness().total_cmp(&a.helpfulness()),
            CommandSort::ByUses => b.uses.cmp(&a.uses),
        };
        by_metric.then(b.created_at.cmp(&a.created_at)).then(ib.cmp(ia))
    });
    picked.into_iter().map(|(_, c)| c).collect()
}
