//! Plain-text prompt templates with `{{name}}` placeholders.
//!
//! ```text
//! # task: edit_part
//! # version: 1
//! [system]
//! ...
//! [user]
//! ... {{instruction}} ...
//! ```
//!
//! Header lines (`# key: value`) come first, then exactly one `[system]` and
//! one `[user]` section.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;
use thiserror::Error;

use super::LlmTask;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("line {line}: malformed header")]
    BadHeader { line: usize },
    #[error("line {line}: text outside a section")]
    OutsideSection { line: usize },
    #[error("duplicate section [{0}]")]
    DuplicateSection(String),
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("missing section [{0}]")]
    MissingSection(&'static str),
    #[error("missing header `{0}`")]
    MissingHeader(&'static str),
    #[error("unclosed placeholder at byte {0}")]
    UnclosedPlaceholder(usize),
    #[error("invalid placeholder name `{0}`")]
    BadPlaceholder(String),
    #[error("no value supplied for placeholder `{0}`")]
    MissingValue(String),
    #[error("template for {0:?} declares task `{1}`")]
    TaskMismatch(LlmTask, String),
    #[error("no template for {0:?}")]
    NoTemplate(LlmTask),
    #[error("bad few-shot example file: {0}")]
    Examples(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub headers: BTreeMap<String, String>,
    system: Vec<Piece>,
    user: Vec<Piece>,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

impl PromptTemplate {
    pub fn parse(source: &str) -> Result<Self, TemplateError> {
        let mut headers = BTreeMap::new();
        let mut sections: BTreeMap<&'static str, String> = BTreeMap::new();
        let mut current: Option<&'static str> = None;

        for (n, line) in source.lines().enumerate() {
            let line_no = n + 1;
            let trimmed = line.trim_end();
            if current.is_none() {
                if trimmed.is_empty() {
                    continue;
                }
                if let Some(h) = trimmed.strip_prefix('#') {
                    let (k, v) = h.split_once(':').ok_or(TemplateError::BadHeader { line: line_no })?;
                    let k = k.trim();
                    if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                        return Err(TemplateError::BadHeader { line: line_no });
                    }
                    headers.insert(k.to_owned(), v.trim().to_owned());
                    continue;
                }
            }
            if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let key = match name {
                    "system" => "system",
                    "user" => "user",
                    other => return Err(TemplateError::UnknownSection(other.to_owned())),
                };
                if sections.contains_key(key) {
                    return Err(TemplateError::DuplicateSection(key.to_owned()));
                }
                sections.insert(key, String::new());
                current = Some(key);
                continue;
            }
            let Some(key) = current else {
                return Err(TemplateError::OutsideSection { line: line_no });
            };
            let body = sections.get_mut(key).expect("section opened");
            body.push_str(line);
            body.push('\n');
        }

        let system = sections.remove("system").ok_or(TemplateError::MissingSection("system"))?;
        let user = sections.remove("user").ok_or(TemplateError::MissingSection("user"))?;
        Ok(Self { headers, system: pieces(system.trim())?, user: pieces(user.trim())? })
    }

    pub fn placeholders(&self) -> BTreeSet<&str> {
        self.system
            .iter()
            .chain(&self.user)
            .filter_map(|p| match p {
                Piece::Slot(s) => Some(s.as_str()),
                Piece::Text(_) => None,
            })
            .collect()
    }

    pub fn render(&self, values: &BTreeMap<&str, String>) -> Result<RenderedPrompt, TemplateError> {
        Ok(RenderedPrompt { system: fill(&self.system, values)?, user: fill(&self.user, values)? })
    }
}

fn pieces(text: &str) -> Result<Vec<Piece>, TemplateError> {
    let mut out = Vec::new();
    let mut rest = text;
    let mut offset = 0;
    while let Some(open) = rest.find("{{") {
        if open > 0 {
            out.push(Piece::Text(rest[..open].to_owned()));
        }
        let after = &rest[open + 2..];
        let close = after.find("}}").ok_or(TemplateError::UnclosedPlaceholder(offset + open))?;
        let name = after[..close].trim();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
            return Err(TemplateError::BadPlaceholder(name.to_owned()));
        }
        out.push(Piece::Slot(name.to_owned()));
        let consumed = open + 2 + close + 2;
        offset += consumed;
        rest = &rest[consumed..];
    }
    if !rest.is_empty() {
        out.push(Piece::Text(rest.to_owned()));
    }
    Ok(out)
}

fn fill(pieces: &[Piece], values: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
    let mut out = String::new();
    for p in pieces {
        match p {
            Piece::Text(t) => out.push_str(t),
            Piece::Slot(name) => {
                out.push_str(values.get(name.as_str()).ok_or_else(|| TemplateError::MissingValue(name.clone()))?)
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct SimilarityExample {
    pub first: String,
    pub second: String,
    pub similar: bool,
}

#[derive(Debug, Clone, Deserialize)]
struct ExampleFile {
    version: u32,
    examples: Vec<SimilarityExample>,
}

/// One template per task, plus the few-shot examples for the similarity judge.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<LlmTask, PromptTemplate>,
    pub similarity_examples: Vec<SimilarityExample>,
    pub similarity_examples_version: u32,
}

const BUILTIN: [(LlmTask, &str); 9] = [
    (LlmTask::GenerateFromTopics, include_str!("../../templates/generate_from_topics.txt")),
    (LlmTask::GenerateFromDocument, include_str!("../../templates/generate_from_document.txt")),
    (LlmTask::ParseImportedAssessment, include_str!("../../templates/parse_imported_assessment.txt")),
    (LlmTask::EditPart, include_str!("../../templates/edit_part.txt")),
    (LlmTask::EditQuestion, include_str!("../../templates/edit_question.txt")),
    (LlmTask::GenerateSimilar, include_str!("../../templates/generate_similar.txt")),
    (LlmTask::InferCommand, include_str!("../../templates/infer_command.txt")),
    (LlmTask::SimilarityJudge, include_str!("../../templates/similarity_judge.txt")),
    (LlmTask::FixLatex, include_str!("../../templates/fix_latex.txt")),
];

const BUILTIN_EXAMPLES: &str = include_str!("../../templates/similarity_examples.json");

impl TemplateSet {
    pub fn builtin() -> Self {
        Self::from_sources(BUILTIN.iter().map(|(t, s)| (*t, *s)), BUILTIN_EXAMPLES)
            .expect("built-in templates are valid")
    }

    /// Loads `<task>.txt` files and `similarity_examples.json` from a directory.
    pub fn from_dir(dir: &std::path::Path) -> Result<Self, TemplateError> {
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name)).map_err(|e| TemplateError::Examples(format!("{name}: {e}")))
        };
        let mut sources = Vec::new();
        for task in LlmTask::ALL {
            sources.push((task, read(&format!("{}.txt", task.name()))?));
        }
        let examples = read("similarity_examples.json")?;
        Self::from_sources(sources.iter().map(|(t, s)| (*t, s.as_str())), &examples)
    }

    pub fn from_sources<'a>(
        sources: impl IntoIterator<Item = (LlmTask, &'a str)>,
        examples_json: &str,
    ) -> Result<Self, TemplateError> {
        let mut templates = BTreeMap::new();
        for (task, src) in sources {
            let t = PromptTemplate::parse(src)?;
            match t.headers.get("task") {
                Some(declared) if declared == task.name() => {}
                Some(declared) => return Err(TemplateError::TaskMismatch(task, declared.clone())),
                None => return Err(TemplateError::MissingHeader("task")),
            }
            if !t.headers.contains_key("version") {
                return Err(TemplateError::MissingHeader("version"));
            }
            templates.insert(task, t);
        }
        for task in LlmTask::ALL {
            if !templates.contains_key(&task) {
                return Err(TemplateError::NoTemplate(task));
            }
        }
        let file: ExampleFile =
            serde_json::from_str(examples_json).map_err(|e| TemplateError::Examples(e.to_string()))?;
        Ok(Self { templates, similarity_examples: file.examples, similarity_examples_version: file.version })
    }

    pub fn get(&self, task: LlmTask) -> &PromptTemplate {
        &self.templates[&task]
    }

    pub fn render_examples(&self) -> String {
        self.similarity_examples
            .iter()
            .map(|e| {
                let verdict = if e.similar { "similar" } else { "different" };
                format!("- \"{}\" vs \"{}\": {verdict}", e.first, e.second)
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}
