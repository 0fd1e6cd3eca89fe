#![allow(dead_code)]

use std::sync::Arc;

use assay_core::clock::ManualClock;
use assay_core::engine::Engine;
use assay_core::llm::{Gateway, LlmProvider, MockProvider, ProviderCall, ProviderError};
use assay_core::model::{
    AnswerOption, Answers, AssessmentId, CourseId, Difficulty, QuestionDraft, QuestionFormat, TeacherId,
};
use async_trait::async_trait;
use chrono::{TimeZone, Utc};

pub struct Fixture {
    pub engine: Engine,
    pub clock: Arc<ManualClock>,
    pub teacher: TeacherId,
    pub course: CourseId,
    pub assessment: AssessmentId,
}

pub fn clock() -> Arc<ManualClock> {
    Arc::new(ManualClock::new(Utc.with_ymd_and_hms(2026, 3, 2, 9, 0, 0).unwrap()))
}

pub fn with_engine(engine: Engine) -> Fixture {
    let clock = clock();
    let engine = engine.with_clock(clock.clone());
    let teacher = engine.register_teacher("Ms. Rivera").unwrap().id;
    let course = engine.create_course(&teacher, "Algebra I").unwrap().id;
    let assessment = engine.create_assessment(&teacher, &course, "Unit 3 quiz").unwrap().id;
    Fixture { engine, clock, teacher, course, assessment }
}

pub fn fixture() -> Fixture {
    with_engine(Engine::in_memory(Gateway::mock()))
}

pub fn mc(stem: &str) -> QuestionDraft {
    QuestionDraft {
        format: QuestionFormat::MultipleChoice,
        stem: stem.into(),
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

pub fn fr(stem: &str) -> QuestionDraft {
    QuestionDraft {
        format: QuestionFormat::FreeResponse,
        stem: stem.into(),
        answers: Answers::Text("(2x−1)(x−1)".into()),
        explanation_or_rubric: "Full credit for both factors.".into(),
        topics: vec!["Factoring quadratics".into()],
        skills: vec![],
        difficulty: Difficulty::Easy,
    }
}

/// A provider that rewrites every part of every question it is asked to
/// edit, whatever the requested scope, and otherwise defers to the mock.
pub struct OverEditor;

#[async_trait]
impl LlmProvider for OverEditor {
    fn name(&self) -> &str {
        "over-editor"
    }

    async fn complete(&self, call: ProviderCall<'_>) -> Result<String, ProviderError> {
        use assay_core::llm::LlmRequest;
        match call.request {
            LlmRequest::EditQuestion { question, .. } => {
                let answers = match &question.answers {
                    Answers::Options(o) => Answers::Options(
                        o.iter().map(|x| AnswerOption::new(format!("{} [x]", x.text), x.is_correct)).collect(),
                    ),
                    Answers::Text(t) => Answers::Text(format!("{t} [x]")),
                };
                let hostile = QuestionDraft {
                    format: question.format,
                    stem: format!("{} [x]", question.stem),
                    answers,
                    explanation_or_rubric: format!("{} [x]", question.explanation_or_rubric),
                    topics: vec!["hijacked".into()],
                    skills: vec!["hijacked".into()],
                    difficulty: match question.difficulty {
                        Difficulty::Hard => Difficulty::Easy,
                        _ => Difficulty::Hard,
                    },
                };
                Ok(serde_json::json!({ "question": hostile }).to_string())
            }
            other => MockProvider::new().respond(other),
        }
    }
}

pub fn over_editing_gateway() -> Gateway {
    Gateway::with_provider(Arc::new(OverEditor))
}
