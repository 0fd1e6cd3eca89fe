//! Tolerant extraction of the JSON object in a model reply, followed by strict
//! per-task schema validation.

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use super::{LlmOutput, LlmRequest};
use crate::model::{Question, QuestionDraft, QuestionFormat, QuestionId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("reply contains no JSON object")]
    NoJson,
}

/// How many candidate `{` positions are tried before giving up.
const MAX_CANDIDATES: usize = 256;

/// Finds the first JSON object in `raw`: the whole reply, the body of a
/// fenced block, or the first `{` that starts a complete object.
pub fn extract_json(raw: &str) -> Result<Value, ExtractError> {
    let trimmed = raw.trim();
    if let Ok(v @ Value::Object(_)) = serde_json::from_str::<Value>(trimmed) {
        return Ok(v);
    }
    if let Some(body) = fenced_body(trimmed) {
        if let Ok(v @ Value::Object(_)) = serde_json::from_str::<Value>(body.trim()) {
            return Ok(v);
        }
    }
    for (i, _) in trimmed.match_indices('{').take(MAX_CANDIDATES) {
        let mut stream = serde_json::Deserializer::from_str(&trimmed[i..]).into_iter::<Value>();
        if let Some(Ok(v @ Value::Object(_))) = stream.next() {
            return Ok(v);
        }
    }
    Err(ExtractError::NoJson)
}

fn fenced_body(text: &str) -> Option<&str> {
    let open = text.find("```")?;
    let after = &text[open + 3..];
    let body_start = after.find('\n')? + 1;
    let body = &after[body_start..];
    let close = body.find("```")?;
    Some(&body[..close])
}

#[derive(Deserialize)]
struct DraftsReply {
    questions: Vec<QuestionDraft>,
}

#[derive(Deserialize)]
struct PartReply {
    content: Value,
}

#[derive(Deserialize)]
struct QuestionReply {
    question: QuestionDraft,
}

#[derive(Deserialize)]
struct CommandReply {
    command: String,
}

#[derive(Deserialize)]
struct SimilarityReply {
    similar_to: Option<usize>,
}

#[derive(Deserialize)]
struct LatexReply {
    text: String,
}

const MAX_COMMAND_CHARS: usize = 300;

/// Parses and validates a raw reply for `request`. The error string explains
/// the first violation found.
pub fn parse_output(request: &LlmRequest, raw: &str) -> Result<LlmOutput, String> {
    let value = extract_json(raw).map_err(|e| e.to_string())?;
    let de = |e: serde_json::Error| e.to_string();
    match request {
        LlmRequest::GenerateFromTopics { counts, .. } | LlmRequest::GenerateFromDocument { counts, .. } => {
            let reply: DraftsReply = serde_json::from_value(value).map_err(de)?;
            validate_drafts(&reply.questions)?;
            let mc = reply.questions.iter().filter(|q| q.format == QuestionFormat::MultipleChoice).count();
            let fr = reply.questions.len() - mc;
            if mc != counts.mc as usize || fr != counts.fr as usize {
                return Err(format!("expected {} MC and {} FR questions, got {mc} and {fr}", counts.mc, counts.fr));
            }
            Ok(LlmOutput::Drafts(reply.questions))
        }
        LlmRequest::ParseImportedAssessment { .. } => {
            let reply: DraftsReply = serde_json::from_value(value).map_err(de)?;
            if reply.questions.is_empty() {
                return Err("no questions extracted".into());
            }
            validate_drafts(&reply.questions)?;
            Ok(LlmOutput::Drafts(reply.questions))
        }
        LlmRequest::GenerateSimilar { question, count } => {
            let mut reply: DraftsReply = serde_json::from_value(value).map_err(de)?;
            if reply.questions.len() != *count as usize {
                return Err(format!("expected {count} variations, got {}", reply.questions.len()));
            }
            validate_drafts(&reply.questions)?;
            for (i, v) in reply.questions.iter_mut().enumerate() {
                if v.format != question.format || v.difficulty != question.difficulty {
                    return Err(format!("variation {i} changes format or difficulty"));
                }
                if normalize(&v.stem) == normalize(&question.stem) {
                    return Err(format!("variation {i} repeats the original stem"));
                }
                v.topics = question.topics.clone();
                v.skills = question.skills.clone();
            }
            Ok(LlmOutput::Drafts(reply.questions))
        }
        LlmRequest::EditPart { question, part, .. } => {
            let reply: PartReply = serde_json::from_value(value).map_err(de)?;
            let part_value = crate::model::PartValue::from_json(*part, reply.content).map_err(de)?;
            let base = question.clone().into_question(QuestionId::from("q_check"), 1);
            let edited: Question = base.with_part(*part, part_value.clone()).map_err(|e| e.to_string())?;
            edited.validate().map_err(|e| e.to_string())?;
            Ok(LlmOutput::Part(part_value))
        }
        LlmRequest::EditQuestion { question, .. } => {
            let reply: QuestionReply = serde_json::from_value(value).map_err(de)?;
            reply.question.validate().map_err(|e| e.to_string())?;
            if reply.question.format != question.format {
                return Err("edit changed the question format".into());
            }
            Ok(LlmOutput::Question(reply.question))
        }
        LlmRequest::InferCommand { .. } => {
            let reply: CommandReply = serde_json::from_value(value).map_err(de)?;
            let text = reply.command.split_whitespace().collect::<Vec<_>>().join(" ");
            if text.is_empty() {
                return Err("empty command".into());
            }
            if text.chars().count() > MAX_COMMAND_CHARS {
                return Err("command too long".into());
            }
            Ok(LlmOutput::Command(text))
        }
        LlmRequest::SimilarityJudge { existing, .. } => {
            let reply: SimilarityReply = serde_json::from_value(value).map_err(de)?;
            match reply.similar_to {
                Some(i) if i >= existing.len() => Err(format!("similar_to {i} out of range")),
                other => Ok(LlmOutput::Similarity(other)),
            }
        }
        LlmRequest::FixLatex { .. } => {
            let reply: LatexReply = serde_json::from_value(value).map_err(de)?;
            Ok(LlmOutput::Latex(reply.text))
        }
    }
}

fn validate_drafts(drafts: &[QuestionDraft]) -> Result<(), String> {
    for (i, d) in drafts.iter().enumerate() {
        d.validate().map_err(|e| format!("question {i}: {e}"))?;
    }
    Ok(())
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}
