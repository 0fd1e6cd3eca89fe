use assay_core::export::{render_pdf, KEY_MARKER};
use assay_core::model::{
    AnswerOption, Answers, Assessment, AssessmentId, CourseId, Difficulty, Question, QuestionFormat, QuestionId,
};

fn words(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn question(id: &str, stem: &str, answers: Answers) -> Question {
    let format = match answers {
        Answers::Options(_) => QuestionFormat::MultipleChoice,
        Answers::Text(_) => QuestionFormat::FreeResponse,
    };
    Question {
        id: QuestionId::from(id),
        format,
        stem: stem.into(),
        answers,
        explanation_or_rubric: "Because the factors multiply back.".into(),
        topics: vec![],
        skills: vec![],
        difficulty: Difficulty::Easy,
        version: 1,
    }
}

fn sample() -> (Assessment, Vec<Question>) {
    let qs = vec![
        question(
            "q_1",
            "Factor the quadratic expression 2x²−3x+1 completely",
            Answers::Options(vec![AnswerOption::new("(2x−1)(x−1)", true), AnswerOption::new("(2x+1)(x−1)", false)]),
        ),
        question(
            "q_2",
            "Is π ≤ 3.15? Explain with $x^2 \\ge 0$.",
            Answers::Text("Yes, since pi is about 3.1416".into()),
        ),
    ];
    let a = Assessment {
        id: AssessmentId::from("asm_1"),
        course_id: CourseId::from("crs_1"),
        name: "Unit 3 quiz".into(),
        question_ids: qs.iter().map(|q| q.id.clone()).collect(),
    };
    (a, qs)
}

#[test]
fn text_layer_round_trips() {
    let (a, qs) = sample();
    let with = words(&pdf_extract::extract_text_from_mem(&render_pdf(&a, &qs, true)).unwrap());
    let without = words(&pdf_extract::extract_text_from_mem(&render_pdf(&a, &qs, false)).unwrap());
    eprintln!("{with}");
    assert!(with.contains("Factor the quadratic expression 2x²−3x+1 completely"));
    assert!(with.contains("Is π ≤ 3.15? Explain with x² ≥ 0."));
    assert!(with.contains(KEY_MARKER));
    assert!(with.contains("Yes, since pi is about 3.1416"));
    assert!(without.contains("Factor the quadratic expression 2x²−3x+1 completely"));
    assert!(!without.contains(KEY_MARKER));
    assert!(!without.contains("Yes, since pi"));
}
