//! Core data model: courses, assessments, questions and their version history.
//!
//! Every type here has a canonical JSON form (lower_snake_case field names,
//! unknown fields rejected). That form is used for persistence, interchange
//! and the HTTP API alike.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub const PREFIX: &'static str = $prefix;

            /// Generates a fresh random identifier.
            pub fn generate() -> Self {
                Self(format!("{}_{}", $prefix, uuid::Uuid::new_v4().simple()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

id_type!(TeacherId, "tch");
id_type!(CourseId, "crs");
id_type!(AssessmentId, "asm");
id_type!(QuestionId, "q");
id_type!(ProposalId, "prop");
id_type!(CommandId, "cmd");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Teacher {
    pub id: TeacherId,
    pub display_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Course {
    pub id: CourseId,
    pub name: String,
    pub owner: TeacherId,
    pub assessment_ids: Vec<AssessmentId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assessment {
    pub id: AssessmentId,
    pub course_id: CourseId,
    pub name: String,
    pub question_ids: Vec<QuestionId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionFormat {
    MultipleChoice,
    FreeResponse,
}

impl QuestionFormat {
    pub const ALL: [QuestionFormat; 2] = [QuestionFormat::MultipleChoice, QuestionFormat::FreeResponse];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    pub fn label(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        }
    }
}

/// One of the six editable sections of a question card.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionPart {
    Stem,
    Answers,
    ExplanationOrRubric,
    Topics,
    Skills,
    Difficulty,
}

impl QuestionPart {
    pub const ALL: [QuestionPart; 6] = [
        QuestionPart::Stem,
        QuestionPart::Answers,
        QuestionPart::ExplanationOrRubric,
        QuestionPart::Topics,
        QuestionPart::Skills,
        QuestionPart::Difficulty,
    ];

    /// Parts an edit command may be scoped to. Difficulty is set directly,
    /// never through a command.
    pub const TAGGABLE: [QuestionPart; 5] = [
        QuestionPart::Stem,
        QuestionPart::Answers,
        QuestionPart::ExplanationOrRubric,
        QuestionPart::Topics,
        QuestionPart::Skills,
    ];

    pub fn is_taggable(self) -> bool {
        self != QuestionPart::Difficulty
    }

    pub fn label(self) -> &'static str {
        match self {
            QuestionPart::Stem => "question stem",
            QuestionPart::Answers => "answer",
            QuestionPart::ExplanationOrRubric => "explanation/rubric",
            QuestionPart::Topics => "topics",
            QuestionPart::Skills => "skills",
            QuestionPart::Difficulty => "difficulty",
        }
    }
}

impl std::str::FromStr for QuestionPart {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| format!("unknown question part `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerOption {
    pub text: String,
    pub is_correct: bool,
}

impl AnswerOption {
    pub fn new(text: impl Into<String>, is_correct: bool) -> Self {
        Self { text: text.into(), is_correct }
    }
}

/// Option list for multiple choice, a single answer text for free response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answers {
    Options(Vec<AnswerOption>),
    Text(String),
}

/// Everything about a question except identity and version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionDraft {
    pub format: QuestionFormat,
    pub stem: String,
    pub answers: Answers,
    pub explanation_or_rubric: String,
    #[serde(default)]
    pub topics: Vec<String>,
    #[serde(default)]
    pub skills: Vec<String>,
    pub difficulty: Difficulty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Question {
    pub id: QuestionId,
    pub format: QuestionFormat,
    pub stem: String,
    pub answers: Answers,
    pub explanation_or_rubric: String,
    pub topics: Vec<String>,
    pub skills: Vec<String>,
    pub difficulty: Difficulty,
    pub version: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("question stem is empty")]
    EmptyStem,
    #[error("multiple-choice question needs at least 2 options, found {0}")]
    TooFewOptions(usize),
    #[error("multiple-choice question needs exactly one correct option, found {0}")]
    CorrectCount(usize),
    #[error("answer option {0} has empty text")]
    EmptyOption(usize),
    #[error("free-response answer is empty")]
    EmptyAnswer,
    #[error("answers do not match the {0:?} format")]
    FormatMismatch(QuestionFormat),
    #[error("{part:?} cannot hold this kind of value")]
    WrongValueKind { part: QuestionPart },
}

impl QuestionDraft {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.stem.trim().is_empty() {
            return Err(ValidationError::EmptyStem);
        }
        match (&self.format, &self.answers) {
            (QuestionFormat::MultipleChoice, Answers::Options(options)) => {
                if options.len() < 2 {
                    return Err(ValidationError::TooFewOptions(options.len()));
                }
                if let Some(i) = options.iter().position(|o| o.text.trim().is_empty()) {
                    return Err(ValidationError::EmptyOption(i));
                }
                let correct = options.iter().filter(|o| o.is_correct).count();
                if correct != 1 {
                    return Err(ValidationError::CorrectCount(correct));
                }
            }
            (QuestionFormat::FreeResponse, Answers::Text(text)) => {
                if text.trim().is_empty() {
                    return Err(ValidationError::EmptyAnswer);
                }
            }
            (format, _) => return Err(ValidationError::FormatMismatch(*format)),
        }
        Ok(())
    }

    pub fn into_question(self, id: QuestionId, version: u32) -> Question {
        Question {
            id,
            format: self.format,
            stem: self.stem,
            answers: self.answers,
            explanation_or_rubric: self.explanation_or_rubric,
            topics: self.topics,
            skills: self.skills,
            difficulty: self.difficulty,
            version,
        }
    }
}

/// The value held by one question part. Which variant is legal depends on
/// the part (and, for answers, on the question format).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum PartValue {
    Text(String),
    Options(Vec<AnswerOption>),
    Labels(Vec<String>),
    Difficulty(Difficulty),
}

impl PartValue {
    /// Interprets untyped JSON as the value of `part`.
    pub fn from_json(part: QuestionPart, value: serde_json::Value) -> Result<Self, serde_json::Error> {
        Ok(match part {
            QuestionPart::Stem | QuestionPart::ExplanationOrRubric => PartValue::Text(serde_json::from_value(value)?),
            QuestionPart::Answers => match serde_json::from_value::<Answers>(value)? {
                Answers::Options(o) => PartValue::Options(o),
                Answers::Text(t) => PartValue::Text(t),
            },
            QuestionPart::Topics | QuestionPart::Skills => PartValue::Labels(serde_json::from_value(value)?),
            QuestionPart::Difficulty => PartValue::Difficulty(serde_json::from_value(value)?),
        })
    }
}

impl Question {
    pub fn draft(&self) -> QuestionDraft {
        QuestionDraft {
            format: self.format,
            stem: self.stem.clone(),
            answers: self.answers.clone(),
            explanation_or_rubric: self.explanation_or_rubric.clone(),
            topics: self.topics.clone(),
            skills: self.skills.clone(),
            difficulty: self.difficulty,
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        self.draft().validate()
    }

    /// True when every part matches, ignoring id and version.
    pub fn same_content(&self, other: &Question) -> bool {
        self.draft() == other.draft()
    }

    pub fn part_value(&self, part: QuestionPart) -> PartValue {
        match part {
            QuestionPart::Stem => PartValue::Text(self.stem.clone()),
            QuestionPart::Answers => match &self.answers {
                Answers::Options(o) => PartValue::Options(o.clone()),
                Answers::Text(t) => PartValue::Text(t.clone()),
            },
            QuestionPart::ExplanationOrRubric => PartValue::Text(self.explanation_or_rubric.clone()),
            QuestionPart::Topics => PartValue::Labels(self.topics.clone()),
            QuestionPart::Skills => PartValue::Labels(self.skills.clone()),
            QuestionPart::Difficulty => PartValue::Difficulty(self.difficulty),
        }
    }

    /// Returns a copy with `part` replaced. The result is not validated.
    pub fn with_part(&self, part: QuestionPart, value: PartValue) -> Result<Question, ValidationError> {
        let mut q = self.clone();
        match (part, value) {
            (QuestionPart::Stem, PartValue::Text(t)) => q.stem = t,
            (QuestionPart::Answers, PartValue::Options(o)) => q.answers = Answers::Options(o),
            (QuestionPart::Answers, PartValue::Text(t)) => q.answers = Answers::Text(t),
            (QuestionPart::ExplanationOrRubric, PartValue::Text(t)) => q.explanation_or_rubric = t,
            (QuestionPart::Topics, PartValue::Labels(l)) => q.topics = l,
            (QuestionPart::Skills, PartValue::Labels(l)) => q.skills = l,
            (QuestionPart::Difficulty, PartValue::Difficulty(d)) => q.difficulty = d,
            (part, _) => return Err(ValidationError::WrongValueKind { part }),
        }
        Ok(q)
    }

    /// Copies the parts in `parts` from `source` onto `self`.
    pub fn take_parts<'a>(&self, source: &Question, parts: impl IntoIterator<Item = &'a QuestionPart>) -> Question {
        let mut q = self.clone();
        for part in parts {
            match part {
                QuestionPart::Stem => q.stem = source.stem.clone(),
                QuestionPart::Answers => q.answers = source.answers.clone(),
                QuestionPart::ExplanationOrRubric => q.explanation_or_rubric = source.explanation_or_rubric.clone(),
                QuestionPart::Topics => q.topics = source.topics.clone(),
                QuestionPart::Skills => q.skills = source.skills.clone(),
                QuestionPart::Difficulty => q.difficulty = source.difficulty,
            }
        }
        q
    }

    /// Plain-text rendering of one part, used for diffs and prompts.
    pub fn part_text(&self, part: QuestionPart) -> String {
        match part {
            QuestionPart::Stem => self.stem.clone(),
            QuestionPart::Answers => match &self.answers {
                Answers::Options(options) => options
                    .iter()
                    .enumerate()
                    .map(|(i, o)| {
                        let mark = if o.is_correct { " (correct)" } else { "" };
                        format!("{}. {}{}", option_letter(i), o.text, mark)
                    })
                    .collect::<Vec<_>>()
                    .join("\n"),
                Answers::Text(t) => t.clone(),
            },
            QuestionPart::ExplanationOrRubric => self.explanation_or_rubric.clone(),
            QuestionPart::Topics => self.topics.join(", "),
            QuestionPart::Skills => self.skills.join(", "),
            QuestionPart::Difficulty => self.difficulty.label().to_owned(),
        }
    }

    /// Multi-line rendering of the whole card, used for side-by-side diffs.
    pub fn full_text(&self) -> String {
        let explanation_label = match self.format {
            QuestionFormat::MultipleChoice => "Explanation",
            QuestionFormat::FreeResponse => "Suggested rubric",
        };
        format!(
            "Question: {}\nAnswer:\n{}\n{}: {}\nTopics: {}\nSkills: {}\nDifficulty: {}\n",
            self.stem,
            self.part_text(QuestionPart::Answers),
            explanation_label,
            self.explanation_or_rubric,
            self.part_text(QuestionPart::Topics),
            self.part_text(QuestionPart::Skills),
            self.difficulty.label(),
        )
    }

    pub fn correct_answer_text(&self) -> Option<&str> {
        match &self.answers {
            Answers::Options(o) => o.iter().find(|o| o.is_correct).map(|o| o.text.as_str()),
            Answers::Text(t) => Some(t),
        }
    }
}

pub fn option_letter(i: usize) -> char {
    (b'A' + (i % 26) as u8) as char
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Manual,
    LlmPartEdit,
    LlmQuestionEdit,
    CommandApply,
    Creation,
    Undo,
    Shuffle,
    Import,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionVersion {
    pub question_id: QuestionId,
    pub version: u32,
    pub snapshot: Question,
    pub timestamp: DateTime<Utc>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionSummary {
    pub total: usize,
    pub by_format: BTreeMap<QuestionFormat, usize>,
    pub by_difficulty: BTreeMap<Difficulty, usize>,
}

impl CompositionSummary {
    pub fn of<'a>(questions: impl IntoIterator<Item = &'a Question>) -> Self {
        let mut summary = CompositionSummary {
            total: 0,
            by_format: QuestionFormat::ALL.iter().map(|f| (*f, 0)).collect(),
            by_difficulty: Difficulty::ALL.iter().map(|d| (*d, 0)).collect(),
        };
        for q in questions {
            summary.total += 1;
            *summary.by_format.entry(q.format).or_default() += 1;
            *summary.by_difficulty.entry(q.difficulty).or_default() += 1;
        }
        summary
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn factoring_mc() -> QuestionDraft {
        QuestionDraft {
            format: QuestionFormat::MultipleChoice,
            stem: "Factor the quadratic expression 2x²−3x+1 completely".into(),
            answers: Answers::Options(vec![
                AnswerOption::new("(2x−1)(x−1)", true),
                AnswerOption::new("(2x+1)(x−1)", false),
                AnswerOption::new("(2x−1)(x+1)", false),
                AnswerOption::new("(2x+1)(x+1)", false),
            ]),
            explanation_or_rubric: "Find two numbers that multiply to 2 and add to −3.".into(),
            topics: vec!["Factoring quadratics".into()],
            skills: vec!["Procedural fluency".into()],
            difficulty: Difficulty::Medium,
        }
    }

    pub fn factoring_fr() -> QuestionDraft {
        QuestionDraft {
            format: QuestionFormat::FreeResponse,
            stem: "Factor 2x²−3x+1 completely".into(),
            answers: Answers::Text("(2x−1)(x−1)".into()),
            explanation_or_rubric: "Full credit for both factors.".into(),
            topics: vec!["Factoring quadratics".into()],
            skills: vec![],
            difficulty: Difficulty::Easy,
        }
    }
}
