use std::sync::Arc;

use assay_core::engine::Engine;
use assay_core::llm::{Gateway, LlmProvider, LlmRequest, MockProvider, ProviderCall, ProviderError};
use assay_core::model::{
    AnswerOption, Answers, AssessmentId, CourseId, Difficulty, QuestionDraft, QuestionFormat, TeacherId,
};
use async_trait::async_trait;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Setup {
    pub engine: Engine,
    pub teacher: TeacherId,
    pub course: CourseId,
    pub assessment: AssessmentId,
}

pub fn setup(gateway: Gateway) -> Setup {
    let engine = Engine::in_memory(gateway);
    let teacher = engine.register_teacher("Ms. Rivera").unwrap().id;
    let course = engine.create_course(&teacher, "Algebra I").unwrap().id;
    let assessment = engine.create_assessment(&teacher, &course, "Unit 3 quiz").unwrap().id;
    Setup { engine, teacher, course, assessment }
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> crate::Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const WORDS: &[&str] = &[
    "Factor",
    "Solve",
    "Simplify",
    "the",
    "expression",
    "for",
    "x",
    "when",
    "line",
    "slope",
    "graph",
    "value",
    "sum",
    "product",
    "roots",
    "completely",
    "each",
    "term",
    "below",
];

const MATH: &[&str] = &["$x^2$", "$\\frac{1}{2}$", "$y = mx + b$", "$\\sqrt{x}$", "$a \\le b$", "$x_1 + x_2$"];

/// A sentence of random words, optionally with inline math.
pub fn sentence(rng: &mut ChaCha8Rng, with_math: bool) -> String {
    let n = rng.random_range(3..9);
    let mut words: Vec<String> = (0..n).map(|_| WORDS.choose(rng).unwrap().to_string()).collect();
    if with_math {
        let at = rng.random_range(0..=words.len());
        words.insert(at, MATH.choose(rng).unwrap().to_string());
    }
    words.join(" ")
}

pub fn labels(rng: &mut ChaCha8Rng, pool: &[&str]) -> Vec<String> {
    let n = rng.random_range(0..3);
    let mut out: Vec<String> = Vec::new();
    for _ in 0..n {
        let l = pool.choose(rng).unwrap().to_string();
        if !out.contains(&l) {
            out.push(l);
        }
    }
    out
}

pub fn difficulty(rng: &mut ChaCha8Rng) -> Difficulty {
    *Difficulty::ALL.choose(rng).unwrap()
}

pub fn mc_draft(rng: &mut ChaCha8Rng, stem: String) -> QuestionDraft {
    let n = rng.random_range(2..7);
    let correct = rng.random_range(0..n);
    let options =
        (0..n).map(|i| AnswerOption::new(format!("option {i} {}", WORDS.choose(rng).unwrap()), i == correct)).collect();
    QuestionDraft {
        format: QuestionFormat::MultipleChoice,
        stem,
        answers: Answers::Options(options),
        explanation_or_rubric: sentence(rng, false),
        topics: labels(rng, &["Factoring", "Linear equations", "Quadratics"]),
        skills: labels(rng, &["Procedural fluency", "Modeling"]),
        difficulty: difficulty(rng),
    }
}

pub fn fr_draft(rng: &mut ChaCha8Rng, stem: String, answer: String) -> QuestionDraft {
    QuestionDraft {
        format: QuestionFormat::FreeResponse,
        stem,
        answers: Answers::Text(answer),
        explanation_or_rubric: sentence(rng, false),
        topics: labels(rng, &["Factoring", "Linear equations", "Quadratics"]),
        skills: labels(rng, &["Procedural fluency", "Modeling"]),
        difficulty: difficulty(rng),
    }
}

pub fn random_draft(rng: &mut ChaCha8Rng) -> QuestionDraft {
    let with_math = rng.random_bool(0.5);
    let stem = sentence(rng, with_math);
    if rng.random_bool(0.5) {
        mc_draft(rng, stem)
    } else {
        let answer = sentence(rng, false);
        fr_draft(rng, stem, answer)
    }
}

/// Rewrites every part of a question it is asked to edit, whatever scope
/// the request names. Everything else goes to the mock.
pub struct OverEditor;

#[async_trait]
impl LlmProvider for OverEditor {
    fn name(&self) -> &str {
        "over-editor"
    }

    async fn complete(&self, call: ProviderCall<'_>) -> Result<String, ProviderError> {
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

/// Independent helpfulness oracle: the posterior mean under a uniform
/// prior as an exact fraction, and its percent rounded half up.
pub fn helpfulness_oracle(accepted: u64, rejected: u64) -> (u128, u128, u32) {
    let num = accepted as u128 + 1;
    let den = accepted as u128 + rejected as u128 + 2;
    let percent = (200 * num + den) / (2 * den);
    (num, den, percent as u32)
}
