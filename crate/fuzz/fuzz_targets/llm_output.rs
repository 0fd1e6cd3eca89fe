#![no_main]
use assay_core::llm::{extract_json, parse_output, LlmRequest, QuestionCounts};
use assay_core::model::{Answers, Difficulty, QuestionDraft, QuestionFormat, QuestionPart};
use libfuzzer_sys::fuzz_target;

fn draft() -> QuestionDraft {
    QuestionDraft {
        format: QuestionFormat::FreeResponse,
        stem: "Factor 2x²−3x+1".into(),
        answers: Answers::Text("(2x−1)(x−1)".into()),
        explanation_or_rubric: String::new(),
        topics: vec![],
        skills: vec![],
        difficulty: Difficulty::Easy,
    }
}

fuzz_target!(|raw: &str| {
    let _ = extract_json(raw);
    let requests = [
        LlmRequest::GenerateFromTopics {
            topics: vec!["Slopes".into()],
            counts: QuestionCounts { mc: 1, fr: 1 },
            difficulty_mix: None,
        },
        LlmRequest::EditPart { question: draft(), part: QuestionPart::Stem, instruction: "shorter".into() },
        LlmRequest::EditQuestion { question: draft(), instruction: "shorter".into(), scope: vec![QuestionPart::Stem] },
        LlmRequest::GenerateSimilar { question: draft(), count: 2 },
        LlmRequest::InferCommand { before: draft(), after: draft(), part: QuestionPart::Stem },
        LlmRequest::SimilarityJudge { candidate: "a".into(), existing: vec!["b".into()] },
        LlmRequest::FixLatex { text: "$x^2$".into() },
    ];
    for r in &requests {
        let _ = parse_output(r, raw);
    }
});
