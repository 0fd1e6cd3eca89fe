use std::collections::BTreeMap;

use assay_core::command::{helpfulness_percent, replay_metrics, CommandOrigin, ScopeTags};
use assay_core::diff::{compute_diff, Granularity};
use assay_core::engine::{ApplyItem, ImportMode, Registration};
use assay_core::export::{AssessmentDocument, KEY_MARKER};
use assay_core::llm::mock::mock_similar;
use assay_core::llm::Gateway;
use assay_core::math::to_unicode;
use assay_core::model::{Answers, PartValue, Question, QuestionDraft, QuestionId, QuestionPart};
use assay_core::proposal::{Decision, ProposalState};
use assay_core::spans::detect_spans;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tokio::runtime::Runtime;

use crate::support::*;
use crate::Outcome;

pub fn helpfulness(_: &Runtime) -> Outcome {
    let h = assay_core::command::helpfulness;
    ensure(h(0, 0) == 0.5, || format!("h(0,0) = {}", h(0, 0)))?;
    ensure(helpfulness_percent(0, 0) == 50, || "h(0,0) does not display as 50%".into())?;
    ensure(helpfulness_percent(4, 0) == 83, || format!("h(4,0) displays as {}%", helpfulness_percent(4, 0)))?;
    let mut r = rng(1);
    for i in 0..10_000u64 {
        let (a, b) =
            if i < 2_500 { (i / 50, i % 50) } else { (r.random_range(0..1_000_000), r.random_range(0..1_000_000)) };
        let v = h(a, b);
        let (num, den, percent) = helpfulness_oracle(a, b);
        ensure(v > 0.0 && v < 1.0, || format!("h({a},{b}) = {v} out of (0,1)"))?;
        ensure((v - num as f64 / den as f64).abs() < 1e-12, || format!("h({a},{b}) = {v}, oracle {num}/{den}"))?;
        ensure(helpfulness_percent(a, b) == percent, || {
            format!("({a},{b}) shows {}%, oracle {percent}%", helpfulness_percent(a, b))
        })?;
        ensure(h(a + 1, b) > v, || format!("not increasing in accepted at ({a},{b})"))?;
        ensure(h(a, b + 1) < v, || format!("not decreasing in rejected at ({a},{b})"))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Apply(usize, usize),
    Resolve(usize, bool),
}

/// Counters recomputed from the usage log must equal the stored ones after
/// every operation of every random interleaving.
pub fn metric_replay(rt: &Runtime) -> Outcome {
    const STEMS: [&str; 4] =
        ["Factor x²−(3/2)x+1/2 completely", "Factor the expression x²−1", "Expand (x+1)²", "Solve $y = x/2$"];
    const COMMANDS: [&str; 3] = ["change the fractions to integers", "make it more concise", "add a hint"];
    let mut r = rng(2);
    let mut total_ops = 0;
    for _ in 0..100 {
        let s = setup(Gateway::mock());
        let qs: Vec<QuestionId> = STEMS
            .iter()
            .map(|stem| {
                let d = fr_draft(&mut r, stem.to_string(), "x".into());
                s.engine.create_question(&s.teacher, &s.assessment, d, None, None).unwrap().question.id
            })
            .collect();
        let cmds: Vec<_> = COMMANDS
            .iter()
            .map(|text| {
                rt.block_on(s.engine.register_command(&s.teacher, text, ScopeTags::all(), CommandOrigin::TypedByUser))
                    .unwrap()
                    .command_id()
                    .clone()
            })
            .collect();
        for _ in 0..10 {
            total_ops += 1;
            let op = if r.random_bool(0.5) {
                Op::Apply(r.random_range(0..cmds.len()), r.random_range(1..=qs.len()))
            } else {
                Op::Resolve(r.random::<u32>() as usize, r.random_bool(0.5))
            };
            match op {
                Op::Apply(c, n) => {
                    let mut targets = qs.clone();
                    targets.shuffle(&mut r);
                    targets.truncate(n);
                    rt.block_on(s.engine.apply_command(&s.teacher, &cmds[c], &targets)).map_err(|e| e.to_string())?;
                }
                Op::Resolve(pick, accept) => {
                    let pending: Vec<_> = s.engine.read(|st| {
                        st.proposals
                            .values()
                            .filter(|p| p.state == ProposalState::Pending)
                            .map(|p| p.id.clone())
                            .collect()
                    });
                    if let Some(pid) = pending.get(pick % pending.len().max(1)) {
                        let d = if accept { Decision::Accept } else { Decision::Reject };
                        match s.engine.resolve_proposal(&s.teacher, pid, d, None) {
                            Ok(_) | Err(assay_core::error::EngineError::StaleProposal { .. }) => {}
                            Err(e) => return Err(format!("resolve: {e}")),
                        }
                    }
                }
            }
            let (commands, usage) = s.engine.read(|st| (st.commands.clone(), st.usage.clone()));
            let replayed = replay_metrics(&usage);
            for c in commands.values() {
                let m = replayed.get(&c.id).copied().unwrap_or_default();
                ensure(m == c.metrics(), || format!("{op:?}: stored {:?}, replayed {m:?}", c.metrics()))?;
                ensure(c.accepted + c.rejected <= c.uses, || {
                    format!("{op:?}: {:?} resolves more than it applied", c.metrics())
                })?;
            }
        }
    }
    ensure(total_ops == 1_000, || format!("{total_ops} operations"))
}

fn part_bytes(q: &Question, part: QuestionPart) -> Vec<u8> {
    serde_json::to_vec(&q.part_value(part)).unwrap()
}

/// An LLM that rewrites every part must still leave out-of-scope parts
/// byte-identical, in the proposal and after accepting it.
pub fn scope_isolation(rt: &Runtime) -> Outcome {
    let s = setup(over_editing_gateway());
    let mut r = rng(3);
    let qs: Vec<QuestionId> = (0..20)
        .map(|_| {
            s.engine.create_question(&s.teacher, &s.assessment, random_draft(&mut r), None, None).unwrap().question.id
        })
        .collect();
    let cid = rt
        .block_on(s.engine.register_command(
            &s.teacher,
            "rewrite everything",
            ScopeTags::all(),
            CommandOrigin::TypedByUser,
        ))
        .unwrap()
        .command_id()
        .clone();
    for call in 0..500 {
        let mut tags: Vec<QuestionPart> =
            QuestionPart::TAGGABLE.iter().copied().filter(|_| r.random_bool(0.4)).collect();
        if tags.is_empty() {
            tags.push(*QuestionPart::TAGGABLE.choose(&mut r).unwrap());
        }
        s.engine.set_scope_tags(&s.teacher, &cid, tags.clone()).map_err(|e| e.to_string())?;
        let n = r.random_range(1..4);
        let targets: Vec<QuestionId> = qs.choose_multiple(&mut r, n).cloned().collect();
        let before: BTreeMap<QuestionId, Question> =
            targets.iter().map(|id| (id.clone(), s.engine.get_question(&s.teacher, id).unwrap())).collect();
        let items = rt.block_on(s.engine.apply_command(&s.teacher, &cid, &targets)).map_err(|e| e.to_string())?;
        for item in items {
            let ApplyItem::Proposed { proposal, question_id } = item else {
                return Err(format!("call {call}: {item:?}"));
            };
            let base = &before[&question_id];
            let accept = r.random_bool(0.5);
            let d = if accept { Decision::Accept } else { Decision::Reject };
            let after =
                s.engine.resolve_proposal(&s.teacher, &proposal.id, d, None).map_err(|e| e.to_string())?.question;
            for part in QuestionPart::ALL.into_iter().filter(|p| !tags.contains(p)) {
                ensure(part_bytes(&proposal.proposed, part) == part_bytes(base, part), || {
                    format!("call {call}: proposal changed {part:?} outside {tags:?}")
                })?;
                ensure(part_bytes(&after, part) == part_bytes(base, part), || {
                    format!("call {call}: accepted edit changed {part:?} outside {tags:?}")
                })?;
            }
            ensure(proposal.proposed.format == base.format, || format!("call {call}: format changed"))?;
        }
    }
    Ok(())
}

const PHRASES: &[&str] = &[
    "make it shorter",
    "make more concise",
    "make the stem briefer",
    "shorten the question",
    "add a hint",
    "give a clue",
    "make it easier",
    "make it simpler",
    "make it harder",
    "make it more challenging",
    "change the fractions to integers",
    "change the fraction to integers",
    "add a real-world application",
    "convert to latex",
    "add more detail",
    "make the explanation longer",
    "use whole numbers instead of fractions",
    "reword for clarity",
];

fn respell(r: &mut ChaCha8Rng, text: &str) -> String {
    match r.random_range(0..3) {
        0 => text.to_owned(),
        1 => text.to_uppercase(),
        _ => format!("  {text} "),
    }
}

pub fn dedup(rt: &Runtime) -> Outcome {
    let s = setup(Gateway::mock());
    let register = |text: &str| {
        rt.block_on(s.engine.register_command(&s.teacher, text, ScopeTags::all(), CommandOrigin::TypedByUser)).unwrap()
    };
    let first = register("make more concise");
    let second = register("make it shorter");
    ensure(matches!(first, Registration::Added(_)), || format!("first registration {first:?}"))?;
    ensure(second == Registration::MergedInto(first.command_id().clone()), || {
        format!("second registration {second:?}")
    })?;

    let mut r = rng(4);
    let mut registrations = 0;
    for _ in 0..50 {
        let s = setup(Gateway::mock());
        for _ in 0..20 {
            let phrase = *PHRASES.choose(&mut r).unwrap();
            let text = respell(&mut r, phrase);
            rt.block_on(s.engine.register_command(&s.teacher, &text, ScopeTags::all(), CommandOrigin::TypedByUser))
                .map_err(|e| e.to_string())?;
            registrations += 1;
        }
        let texts: Vec<String> = s.engine.read(|st| st.commands.values().map(|c| c.text.clone()).collect());
        for (i, a) in texts.iter().enumerate() {
            for b in &texts[i + 1..] {
                ensure(!mock_similar(a, b), || format!("{a:?} and {b:?} both registered"))?;
            }
        }
    }
    ensure(registrations == 1_000, || format!("{registrations} registrations"))
}

pub fn manual_inference(rt: &Runtime) -> Outcome {
    let s = setup(Gateway::mock());
    let mut r = rng(5);
    let draft = fr_draft(&mut r, "Factor x²−(3/2)x+1/2 completely".into(), "(2x−1)(x−1)".into());
    let q = s.engine.create_question(&s.teacher, &s.assessment, draft, None, None).unwrap().question;
    let out = rt
        .block_on(s.engine.manual_edit(
            &s.teacher,
            &q.id,
            QuestionPart::Stem,
            PartValue::Text("Factor 2x²−3x+1 completely".into()),
            None,
        ))
        .map_err(|e| e.to_string())?;
    let Some(Registration::Added(cid)) = out.inferred else {
        return Err(format!("no command registered: {:?}", out.inferred));
    };
    let cmd = s.engine.get_command(&s.teacher, &cid).map_err(|e| e.to_string())?.command;
    let text = cmd.text.to_lowercase();
    ensure(text.contains("fractions") && text.contains("integers"), || format!("inferred {:?}", cmd.text))?;
    ensure(cmd.scope_tags == ScopeTags::single(QuestionPart::Stem).unwrap(), || format!("scope {:?}", cmd.scope_tags))?;
    ensure(cmd.origin == CommandOrigin::InferredFromManual, || format!("origin {:?}", cmd.origin))?;
    ensure(out.question.version == 2, || format!("version {}", out.question.version))
}

pub fn shorter_proposal(rt: &Runtime) -> Outcome {
    let s = setup(Gateway::mock());
    let mut r = rng(6);
    let original = "Factor the quadratic expression 2x²−3x+1 completely";
    let q = s
        .engine
        .create_question(&s.teacher, &s.assessment, mc_draft(&mut r, original.into()), None, None)
        .unwrap()
        .question;
    let proposed = rt
        .block_on(s.engine.propose_part_edit(&s.teacher, &q.id, QuestionPart::Stem, "make this question shorter"))
        .map_err(|e| e.to_string())?;
    let p = &proposed.proposal;
    ensure(p.proposed.stem == "Factor 2x²−3x+1", || format!("proposed stem {:?}", p.proposed.stem))?;
    ensure(p.diff.granularity == Granularity::InlineWordDiff, || format!("{:?}", p.diff.granularity))?;
    ensure(p.diff.original() == original, || format!("original side {:?}", p.diff.original()))?;
    ensure(p.diff.revised() == "Factor 2x²−3x+1", || format!("revised side {:?}", p.diff.revised()))?;
    let revision = s.engine.revision(&s.teacher, &s.assessment).unwrap();
    let res =
        s.engine.resolve_proposal(&s.teacher, &p.id, Decision::Accept, Some(revision)).map_err(|e| e.to_string())?;
    ensure(res.question.version == q.version + 1, || format!("version {} after accept", res.question.version))?;
    ensure(res.question.stem == "Factor 2x²−3x+1", || "accepted stem differs".into())
}

const PIECES: &[&str] =
    &["Factor", "the", "x²−3x+1", "(2x−1)", "completely", "é", "日本語", "$x^2$", ".", ",", "a", "b", "1/2", "−"];
const GAPS: &[&str] = &[" ", " ", " ", "  ", "\n", "\t", " \n ", ""];

fn random_text(r: &mut ChaCha8Rng) -> Vec<String> {
    let n = r.random_range(0..14);
    (0..n).map(|_| format!("{}{}", PIECES.choose(r).unwrap(), GAPS.choose(r).unwrap())).collect()
}

fn mutate(r: &mut ChaCha8Rng, mut pieces: Vec<String>) -> Vec<String> {
    for _ in 0..r.random_range(0..4) {
        let fresh = format!("{}{}", PIECES.choose(r).unwrap(), GAPS.choose(r).unwrap());
        match (r.random_range(0..3), pieces.len()) {
            (_, 0) | (0, _) => {
                let at = r.random_range(0..=pieces.len());
                pieces.insert(at, fresh);
            }
            (1, n) => {
                pieces.remove(r.random_range(0..n));
            }
            (_, n) => pieces[r.random_range(0..n)] = fresh,
        }
    }
    pieces
}

pub fn diff_oracle(_: &Runtime) -> Outcome {
    let mut r = rng(7);
    for i in 0..10_000 {
        let a = random_text(&mut r);
        let b = if r.random_bool(0.7) { mutate(&mut r, a.clone()) } else { random_text(&mut r) };
        let (a, b) = (a.concat(), b.concat());
        for g in [Granularity::InlineWordDiff, Granularity::SideBySide] {
            let d = compute_diff(&a, &b, g);
            ensure(d.original() == a, || format!("pair {i} {g:?}: original side {:?} != {a:?}", d.original()))?;
            ensure(d.revised() == b, || format!("pair {i} {g:?}: revised side {:?} != {b:?}", d.revised()))?;
            ensure(d.is_unchanged() == (a == b), || format!("pair {i} {g:?}: unchanged flag wrong"))?;
            let sentinel = a.is_empty() && b.is_empty() && d.hunks.len() == 1;
            ensure(sentinel || d.hunks.iter().all(|h| !h.text.is_empty()), || format!("pair {i} {g:?}: empty hunk"))?;
        }
    }
    Ok(())
}

fn option_multiset(q: &Question) -> Vec<(String, bool)> {
    let Answers::Options(o) = &q.answers else { return vec![] };
    let mut v: Vec<_> = o.iter().map(|x| (x.text.clone(), x.is_correct)).collect();
    v.sort();
    v
}

pub fn shuffle(_: &Runtime) -> Outcome {
    let mut r = rng(8);
    let mut questions = 0;
    for round in 0..100 {
        let drafts: Vec<QuestionDraft> = (0..10)
            .map(|_| {
                let stem = sentence(&mut r, false);
                if r.random_bool(0.8) {
                    mc_draft(&mut r, stem)
                } else {
                    let answer = sentence(&mut r, false);
                    fr_draft(&mut r, stem, answer)
                }
            })
            .collect();
        let seed: u64 = r.random();
        let run = || {
            let s = setup(Gateway::mock());
            for d in &drafts {
                s.engine.create_question(&s.teacher, &s.assessment, d.clone(), None, None).unwrap();
            }
            let before = s.engine.get_assessment(&s.teacher, &s.assessment).unwrap();
            s.engine.shuffle_mc_options(&s.teacher, &s.assessment, seed, Some(before.revision)).unwrap();
            (before, s.engine.get_assessment(&s.teacher, &s.assessment).unwrap())
        };
        let (before, after) = run();
        ensure(before.composition == after.composition, || format!("round {round}: composition changed"))?;
        for (b, a) in before.questions.iter().zip(&after.questions) {
            questions += 1;
            ensure(option_multiset(b) == option_multiset(a), || format!("round {round}: options of {} changed", b.id))?;
            if let Answers::Options(o) = &a.answers {
                ensure(o.iter().filter(|x| x.is_correct).count() == 1, || {
                    format!("round {round}: key of {} broken", a.id)
                })?;
            } else {
                ensure(a == b, || format!("round {round}: free response {} touched", a.id))?;
            }
        }
        let (_, again) = run();
        let answers =
            |v: &assay_core::engine::AssessmentView| v.questions.iter().map(|q| q.answers.clone()).collect::<Vec<_>>();
        ensure(answers(&after) == answers(&again), || format!("round {round}: seed {seed} not deterministic"))?;
    }
    ensure(questions == 1_000, || format!("{questions} questions"))
}

pub fn undo(rt: &Runtime) -> Outcome {
    let mut r = rng(9);
    for round in 0..40 {
        let s = setup(Gateway::mock());
        let mut stacks: Vec<(QuestionId, Vec<Question>)> = (0..3)
            .map(|_| {
                let q = s
                    .engine
                    .create_question(&s.teacher, &s.assessment, random_draft(&mut r), None, None)
                    .unwrap()
                    .question;
                (q.id.clone(), vec![q])
            })
            .collect();
        let mut histories: Vec<Vec<assay_core::model::QuestionVersion>> =
            stacks.iter().map(|(id, _)| s.engine.question_history(&s.teacher, id).unwrap()).collect();
        for step in 0..30 {
            let k = r.random_range(0..stacks.len());
            let (id, stack) = &mut stacks[k];
            let current = stack.last().unwrap().clone();
            if r.random_bool(0.4) {
                match s.engine.undo_question(&s.teacher, id, None) {
                    Ok(change) => {
                        stack.pop();
                        let expected = stack.last().unwrap();
                        ensure(change.question.draft() == expected.draft(), || {
                            format!("round {round} step {step}: undo did not restore the prior content")
                        })?;
                        *stack.last_mut().unwrap() = change.question;
                    }
                    Err(assay_core::error::EngineError::NothingToUndo) => {
                        ensure(stack.len() == 1, || {
                            format!("round {round} step {step}: undo refused with {} states", stack.len())
                        })?;
                    }
                    Err(e) => return Err(e.to_string()),
                }
            } else {
                let (part, value) = match r.random_range(0..3) {
                    0 => {
                        let math = r.random_bool(0.3);
                        (QuestionPart::Stem, PartValue::Text(sentence(&mut r, math)))
                    }
                    1 => (QuestionPart::Topics, PartValue::Labels(labels(&mut r, &["Factoring", "Graphs", "Ratios"]))),
                    _ => (QuestionPart::Difficulty, PartValue::Difficulty(difficulty(&mut r))),
                };
                let out =
                    rt.block_on(s.engine.manual_edit(&s.teacher, id, part, value, None)).map_err(|e| e.to_string())?;
                if out.changed {
                    stack.push(out.question);
                } else {
                    ensure(out.question == current, || {
                        format!("round {round} step {step}: no-op edit changed content")
                    })?;
                }
            }
            let h = s.engine.question_history(&s.teacher, id).map_err(|e| e.to_string())?;
            let old = &histories[k];
            ensure(h.len() >= old.len() && h[..old.len()] == old[..], || {
                format!("round {round} step {step}: history rewritten")
            })?;
            ensure(h.iter().enumerate().all(|(i, v)| v.version as usize == i + 1), || {
                format!("round {round} step {step}: versions have gaps")
            })?;
            let now = s.engine.get_question(&s.teacher, id).unwrap();
            ensure(h.last().map(|v| &v.snapshot) == Some(&now), || {
                format!("round {round} step {step}: latest version is not current")
            })?;
            histories[k] = h;
        }
    }
    Ok(())
}

fn squash(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

/// What a rich string looks like in the PDF text layer: math spans as
/// Unicode, with sub- and superscript digits outside Latin-1 written as
/// `_n` and `^n` since the standard fonts have no glyphs for them.
fn as_printed(text: &str) -> String {
    let stand_in = |c: char| match c {
        '₀'..='₉' => format!("_{}", c as u32 - '₀' as u32),
        '⁰' | '⁴'..='⁹' => format!("^{}", c as u32 - '⁰' as u32),
        _ => c.to_string(),
    };
    detect_spans(text)
        .iter()
        .map(|span| match span.is_math() {
            true => to_unicode(&span.source).unwrap_or_else(|_| span.source.clone()).chars().map(stand_in).collect(),
            false => text[span.range.clone()].to_owned(),
        })
        .collect()
}

fn math_spans(text: &str) -> usize {
    detect_spans(text).iter().filter(|s| s.is_math()).count()
}

pub fn export(_: &Runtime) -> Outcome {
    let mut r = rng(10);
    let s = setup(Gateway::mock());
    let restored = setup(Gateway::mock());
    for i in 0..1_000 {
        let a = s.engine.create_assessment(&s.teacher, &s.course, &format!("Quiz {i}")).unwrap().id;
        for _ in 0..r.random_range(1..4) {
            let q = s.engine.create_question(&s.teacher, &a, random_draft(&mut r), None, None).unwrap().question;
            if r.random_bool(0.3) {
                s.engine.duplicate_question(&s.teacher, &q.id, None).unwrap();
            }
        }
        let json = s.engine.export_json(&s.teacher, &a).map_err(|e| e.to_string())?;
        let doc = AssessmentDocument::parse(&json).map_err(|e| format!("assessment {i}: {e}"))?;
        ensure(doc.to_json() == json, || format!("assessment {i}: JSON does not round-trip"))?;
        if i % 10 == 0 {
            let view = restored
                .engine
                .import_json(&restored.teacher, &restored.course, &json, ImportMode::Restore)
                .map_err(|e| e.to_string())?;
            let back = AssessmentDocument::parse(
                &restored.engine.export_json(&restored.teacher, &view.assessment.id).unwrap(),
            )
            .unwrap();
            let mut expected = doc.clone();
            expected.assessment.course_id = restored.course.clone();
            ensure(back == expected, || format!("assessment {i}: restore changed the document"))?;
        }
    }

    for i in 0..10 {
        let a = s.engine.create_assessment(&s.teacher, &s.course, &format!("Printed {i}")).unwrap().id;
        let mut qs = Vec::new();
        for j in 0..r.random_range(2..6) {
            let math = r.random_bool(0.6);
            let stem = sentence(&mut r, math);
            let answer = format!("Answer{i}x{j}");
            let mut d =
                if r.random_bool(0.5) { mc_draft(&mut r, stem) } else { fr_draft(&mut r, stem, answer.clone()) };
            d.explanation_or_rubric = format!("Reason{i}x{j} {}", d.explanation_or_rubric);
            qs.push(s.engine.create_question(&s.teacher, &a, d, None, None).unwrap().question);
        }
        for keys in [false, true] {
            let pdf = s.engine.export_pdf(&s.teacher, &a, keys).map_err(|e| e.to_string())?;
            let text = squash(&pdf_extract::extract_text_from_mem(&pdf).map_err(|e| e.to_string())?);
            for q in &qs {
                ensure(text.contains(&squash(&as_printed(&q.stem))), || format!("pdf {i}: stem {:?} missing", q.stem))?;
                let reason = q.explanation_or_rubric.split_whitespace().next().unwrap();
                ensure(text.contains(reason) == keys, || format!("pdf {i} keys={keys}: explanation presence wrong"))?;
                if let Answers::Text(t) = &q.answers {
                    ensure(text.contains(t.as_str()) == keys, || {
                        format!("pdf {i} keys={keys}: answer {t:?} presence wrong")
                    })?;
                }
            }
            ensure(text.contains(&squash(KEY_MARKER)) == keys, || {
                format!("pdf {i} keys={keys}: key section presence wrong")
            })?;

            let html = s.engine.export_html(&s.teacher, &a, keys).map_err(|e| e.to_string())?;
            let lower = html.to_lowercase();
            for external in ["http:", "https:", "ftp:", "href=", "<link", "<script", "<iframe", "@import", "url("] {
                ensure(!lower.contains(external), || format!("html {i}: external reference {external:?}"))?;
            }
            let sources = lower.matches(" src=\"").count();
            ensure(sources == lower.matches(" src=\"data:").count(), || format!("html {i}: non-embedded source"))?;
            let mut spans = 0;
            for q in &qs {
                spans += math_spans(&q.stem);
                if let Answers::Options(o) = &q.answers {
                    spans += o.iter().map(|x| math_spans(&x.text)).sum::<usize>();
                }
                if keys {
                    spans += match &q.answers {
                        Answers::Options(o) => o.iter().filter(|x| x.is_correct).map(|x| math_spans(&x.text)).sum(),
                        Answers::Text(t) => math_spans(t),
                    };
                    spans += math_spans(&q.explanation_or_rubric);
                }
            }
            let images = html.matches("<img").count();
            let embedded = html.matches("src=\"data:image/").count();
            ensure(images == spans && embedded == spans, || {
                format!("html {i} keys={keys}: {images} images ({embedded} embedded) for {spans} math spans")
            })?;
        }
    }
    Ok(())
}
