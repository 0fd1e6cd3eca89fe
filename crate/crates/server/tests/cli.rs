use std::process::Command;

use assay_core::engine::Engine;
use assay_core::llm::Gateway;
use assay_core::model::{Answers, Difficulty, QuestionDraft, QuestionFormat};
use assay_core::store::FileJournal;

fn assay() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_assay"));
    c.env("LLM_PROVIDER", "mock").env("RUST_LOG", "error");
    c
}

#[test]
fn export_reads_the_journal() {
    let dir = tempfile::tempdir().unwrap();
    let journal = dir.path().join("journal.jsonl");
    let (aid, expected) = {
        let engine = Engine::open(Box::new(FileJournal::open(&journal).unwrap()), Gateway::mock()).unwrap();
        let t = engine.register_teacher("Ms. Rivera").unwrap().id;
        let c = engine.create_course(&t, "Algebra I").unwrap().id;
        let a = engine.create_assessment(&t, &c, "Quiz").unwrap().id;
        let draft = QuestionDraft {
            format: QuestionFormat::FreeResponse,
            stem: "Solve $x^2 = 4$".into(),
            answers: Answers::Text("x = ±2".into()),
            explanation_or_rubric: "Both roots.".into(),
            topics: vec![],
            skills: vec![],
            difficulty: Difficulty::Easy,
        };
        engine.create_question(&t, &a, draft, None, None).unwrap();
        (a.to_string(), engine.export_json(&t, &a).unwrap())
    };

    let out = assay()
        .args(["export", "--format", "json", "--assessment", &aid])
        .arg("--journal")
        .arg(&journal)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);

    let pdf = dir.path().join("quiz.pdf");
    let status = assay()
        .args(["export", "--format", "pdf", "--with-keys", "--assessment", &aid])
        .arg("--journal")
        .arg(&journal)
        .arg("--out")
        .arg(&pdf)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(std::fs::read(&pdf).unwrap().starts_with(b"%PDF-"));

    let html = assay()
        .args(["export", "--format", "html", "--assessment", &aid])
        .arg("--journal")
        .arg(&journal)
        .output()
        .unwrap();
    let html = String::from_utf8(html.stdout).unwrap();
    assert!(html.contains("<img") && !html.contains("±2"));
}

#[test]
fn export_of_unknown_assessment_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = assay()
        .args(["export", "--format", "json", "--assessment", "asm_missing", "--journal"])
        .arg(dir.path().join("j.jsonl"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("asm_missing"));
}

#[test]
fn routes_prints_the_manifest() {
    let out = assay().arg("routes").output().unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), assay_server::api::manifest_json());
}
