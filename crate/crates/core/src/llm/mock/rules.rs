//! Keyword-driven transformations used by the mock provider.

use std::collections::BTreeSet;

use super::fractions::{clear_fractions, has_fractions};
use crate::llm::{DifficultyMix, QuestionCounts};
use crate::model::{
    AnswerOption, Answers, Difficulty, PartValue, QuestionDraft, QuestionFormat, QuestionId, QuestionPart,
};
use crate::spans::{detect_spans, SpanKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TextRule {
    Echo(String),
    Identity,
    ClearFractions,
    Shorten,
    Application,
    Hint,
    Detail,
    Latex,
}

impl TextRule {
    pub fn classify(instruction: &str) -> Option<TextRule> {
        let trimmed = instruction.trim();
        if let Some(rest) = trimmed.strip_prefix("echo:") {
            return Some(TextRule::Echo(rest.trim().to_owned()));
        }
        let lower = trimmed.to_lowercase();
        let has = |w: &str| lower.contains(w);
        let rule = if has("unchanged") || has("identity") {
            TextRule::Identity
        } else if has("fraction") && (has("integer") || has("whole number")) {
            TextRule::ClearFractions
        } else if has("shorter") || has("concise") || has("shorten") {
            TextRule::Shorten
        } else if has("application") {
            TextRule::Application
        } else if has("hint") {
            TextRule::Hint
        } else if has("detail") {
            TextRule::Detail
        } else if has("latex") {
            TextRule::Latex
        } else {
            return None;
        };
        Some(rule)
    }

    fn text(&self, part: QuestionPart, text: &str) -> String {
        match self {
            TextRule::Echo(s) => s.clone(),
            TextRule::Identity => text.to_owned(),
            TextRule::ClearFractions => clear_fractions(text),
            TextRule::Shorten => shorten(text),
            TextRule::Application if part == QuestionPart::Stem => application(text),
            TextRule::Hint if part == QuestionPart::Stem => format!("{text} Hint: {HINT}"),
            TextRule::Detail => match part {
                QuestionPart::Stem => format!("{text} Show every step of your work."),
                QuestionPart::ExplanationOrRubric => format!("{text} Each step follows from the one before it."),
                _ => text.to_owned(),
            },
            TextRule::Latex => unicode_to_latex(text),
            _ => text.to_owned(),
        }
    }

    fn labels(&self, labels: &[String]) -> Vec<String> {
        match self {
            TextRule::Echo(s) => vec![s.clone()],
            TextRule::Shorten => labels.iter().map(|l| shorten(l)).filter(|l| !l.is_empty()).collect(),
            _ => labels.to_vec(),
        }
    }

    /// Applies the rule to one part. Difficulty is never touched.
    pub fn part(&self, draft: &QuestionDraft, part: QuestionPart) -> PartValue {
        let q = draft.clone().into_question(QuestionId::from("q_mock"), 1);
        match q.part_value(part) {
            PartValue::Text(t) => PartValue::Text(self.text(part, &t)),
            PartValue::Options(options) => PartValue::Options(
                options.iter().map(|o| AnswerOption::new(self.text(part, &o.text), o.is_correct)).collect(),
            ),
            PartValue::Labels(l) => PartValue::Labels(self.labels(&l)),
            v @ PartValue::Difficulty(_) => v,
        }
    }

    pub fn question(&self, draft: &QuestionDraft, scope: &[QuestionPart]) -> QuestionDraft {
        let mut q = draft.clone().into_question(QuestionId::from("q_mock"), 1);
        for part in scope.iter().filter(|p| p.is_taggable()) {
            let value = self.part(draft, *part);
            if let Ok(next) = q.with_part(*part, value) {
                q = next;
            }
        }
        q.draft()
    }
}

const HINT: &str = "look for two numbers whose product and sum match the coefficients.";

const FILLER: &[&str] = &[
    "the quadratic expression",
    "the following expression",
    "the given expression",
    "the expression",
    "the following",
    "completely",
    "carefully",
    "please",
    "in full",
    "fully",
];

/// Drops filler phrases and bracketed asides, then tidies whitespace.
pub fn shorten(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for span in detect_spans(text) {
        let raw = &text[span.range.clone()];
        if span.kind == SpanKind::Plain {
            let mut plain = drop_asides(raw);
            for phrase in FILLER {
                plain = drop_phrase(&plain, phrase);
            }
            out.push_str(&plain);
        } else {
            out.push_str(raw);
        }
    }
    tidy(&out)
}

fn drop_phrase(text: &str, phrase: &str) -> String {
    let lower = text.to_lowercase();
    if lower.len() != text.len() {
        // Case folding changed byte offsets; match case-sensitively instead.
        return drop_phrase_exact(text, phrase);
    }
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    let mut from = 0;
    while let Some(i) = lower[from..].find(phrase).map(|i| i + from) {
        let end = i + phrase.len();
        if at_boundary(text, i, end) {
            out.push_str(&text[last..i]);
            last = end;
        }
        from = end;
    }
    out.push_str(&text[last..]);
    out
}

fn drop_phrase_exact(text: &str, phrase: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (i, _) in text.match_indices(phrase) {
        let end = i + phrase.len();
        if i >= last && at_boundary(text, i, end) {
            out.push_str(&text[last..i]);
            last = end;
        }
    }
    out.push_str(&text[last..]);
    out
}

fn at_boundary(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
}

/// Removes parenthesized asides of two or more words, such as "(in lowest terms)".
fn drop_asides(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('(') {
        let Some(len) = rest[open..].find(')') else { break };
        let inner = &rest[open + 1..open + len];
        out.push_str(&rest[..open]);
        let words = inner.split_whitespace().filter(|w| w.chars().all(char::is_alphabetic)).count();
        if words < 2 || inner.contains('(') {
            out.push_str(&rest[open..=open + len]);
        }
        rest = &rest[open + len + 1..];
    }
    out.push_str(rest);
    out
}

fn tidy(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut out = collapsed;
    for p in [" .", " ,", " ?", " !", " ;", " :"] {
        out = out.replace(p, &p[1..]);
    }
    out
}

/// Finds the main expression of a stem: its first math span, else the first
/// word that looks like a polynomial.
fn main_expression(stem: &str) -> Option<String> {
    let spans = detect_spans(stem);
    if let Some(s) = spans.iter().find(|s| s.is_math()) {
        return Some(stem[s.range.clone()].to_owned());
    }
    stem.split_whitespace()
        .map(|w| w.trim_end_matches(['.', ',', ';', ':', '?', '!']))
        .find(|w| {
            w.chars().any(|c| c.is_ascii_digit())
                && w.chars().any(|c| c.is_ascii_lowercase())
                && w.chars().any(|c| "+-−²³^".contains(c))
        })
        .map(str::to_owned)
}

fn application(stem: &str) -> String {
    match main_expression(stem) {
        Some(expr) => format!(
            "A rectangular plot of land has an area represented by the expression {expr} square units. \
             Determine two expressions that represent the possible dimensions of the plot, given that the \
             area is expressed as the product of its length and width."
        ),
        None => stem.to_owned(),
    }
}

const LATEX_SYMBOLS: &[(char, &str)] = &[
    ('−', "-"),
    ('×', "\\times "),
    ('÷', "\\div "),
    ('·', "\\cdot "),
    ('±', "\\pm "),
    ('≤', "\\le "),
    ('≥', "\\ge "),
    ('≠', "\\neq "),
    ('≈', "\\approx "),
    ('∞', "\\infty "),
    ('π', "\\pi "),
    ('θ', "\\theta "),
    ('α', "\\alpha "),
    ('β', "\\beta "),
    ('√', "\\sqrt "),
    ('⁰', "^0"),
    ('¹', "^1"),
    ('²', "^2"),
    ('³', "^3"),
    ('⁴', "^4"),
    ('⁵', "^5"),
    ('⁶', "^6"),
    ('⁷', "^7"),
    ('⁸', "^8"),
    ('⁹', "^9"),
];

fn latex_for(c: char) -> Option<&'static str> {
    LATEX_SYMBOLS.iter().find(|(u, _)| *u == c).map(|(_, l)| *l)
}

/// Rewrites words carrying unicode math symbols as `$...$` LaTeX. Existing
/// math and code spans are kept.
pub fn unicode_to_latex(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for span in detect_spans(text) {
        let raw = &text[span.range.clone()];
        if span.kind != SpanKind::Plain {
            out.push_str(raw);
            continue;
        }
        let mut rest = raw;
        while !rest.is_empty() {
            let ws = rest.len() - rest.trim_start().len();
            out.push_str(&rest[..ws]);
            rest = &rest[ws..];
            let n = rest.find(char::is_whitespace).unwrap_or(rest.len());
            let word = &rest[..n];
            rest = &rest[n..];
            let core = word.trim_end_matches(['.', ',', ';', ':', '?', '!']);
            if core.chars().any(|c| latex_for(c).is_some()) {
                let converted: String =
                    core.chars().map(|c| latex_for(c).map_or_else(|| c.to_string(), str::to_owned)).collect();
                out.push('$');
                out.push_str(converted.trim_end());
                out.push('$');
                out.push_str(&word[core.len()..]);
            } else {
                out.push_str(word);
            }
        }
    }
    out
}

pub fn infer_command(before: &QuestionDraft, after: &QuestionDraft, part: QuestionPart) -> String {
    let b = before.clone().into_question(QuestionId::from("q_before"), 1).part_text(part);
    let a = after.clone().into_question(QuestionId::from("q_after"), 1).part_text(part);
    if has_fractions(&b) && !has_fractions(&a) {
        return "change the fractions to integers to reduce difficulty".into();
    }
    let (nb, na) = (b.split_whitespace().count(), a.split_whitespace().count());
    if na < nb {
        "make it more concise".into()
    } else if na > nb {
        "add more detail".into()
    } else {
        format!("rephrase the {}", part.label())
    }
}

const SYNONYMS: &[(&str, &str)] = &[
    ("shorter", "concise"),
    ("shorter", "briefer"),
    ("shorten", "concise"),
    ("concise", "briefer"),
    ("easier", "simpler"),
    ("harder", "challenging"),
    ("hint", "clue"),
    ("longer", "detail"),
    ("fraction", "fractions"),
    ("integer", "integers"),
];

fn tokens(s: &str) -> BTreeSet<String> {
    s.to_lowercase().split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_owned).collect()
}

/// Jaccard similarity of normalized tokens, or a shared synonym pair.
pub fn similar(a: &str, b: &str) -> bool {
    let (ta, tb) = (tokens(a), tokens(b));
    if ta.is_empty() || tb.is_empty() {
        return ta == tb;
    }
    let inter = ta.intersection(&tb).count();
    let union = ta.union(&tb).count();
    if inter * 2 >= union {
        return true;
    }
    SYNONYMS.iter().any(|(x, y)| {
        let (x, y) = (x.to_string(), y.to_string());
        (ta.contains(&x) && tb.contains(&y)) || (ta.contains(&y) && tb.contains(&x))
    })
}

pub fn judge(candidate: &str, existing: &[String]) -> Option<usize> {
    existing.iter().position(|e| similar(candidate, e))
}

pub fn generate_from_topics(
    topics: &[String],
    counts: QuestionCounts,
    mix: Option<DifficultyMix>,
) -> Vec<QuestionDraft> {
    let seq = mix.map(|m| m.sequence()).filter(|s| !s.is_empty()).unwrap_or_else(|| Difficulty::ALL.to_vec());
    let total = counts.total() as usize;
    (0..total)
        .map(|i| {
            let format =
                if i < counts.mc as usize { QuestionFormat::MultipleChoice } else { QuestionFormat::FreeResponse };
            let topic = topics.get(i % topics.len().max(1)).cloned().unwrap_or_default();
            topic_question(i, &topic, format, seq[i % seq.len()])
        })
        .collect()
}

fn topic_question(i: usize, topic: &str, format: QuestionFormat, difficulty: Difficulty) -> QuestionDraft {
    let m = (i % 5) as i64 + 2;
    let b = (i % 7) as i64 + 1;
    let (stem, correct, distractors, explanation) = if i.is_multiple_of(2) {
        (
            format!("{topic}: what is the slope of the line $y = \\frac{{1}}{{{m}}}x + \\frac{{{b}}}{{2}}$?"),
            format!("$\\frac{{1}}{{{m}}}$"),
            [format!("${m}$"), format!("$-\\frac{{1}}{{{m}}}$"), format!("$-{m}$")],
            format!("In $y = mx + b$ the slope is the coefficient of $x$, here $\\frac{{1}}{{{m}}}$."),
        )
    } else {
        (
            format!("{topic}: write the y-intercept of the line y = {m}x + {b}."),
            b.to_string(),
            [format!("−{b}"), (b + 1).to_string(), "0".to_owned()],
            format!("The y-intercept is the constant term, {b}."),
        )
    };
    let answers = match format {
        QuestionFormat::MultipleChoice => {
            let mut options: Vec<AnswerOption> =
                distractors.iter().map(|d| AnswerOption::new(d.clone(), false)).collect();
            options.insert(i % 4, AnswerOption::new(correct, true));
            Answers::Options(options)
        }
        QuestionFormat::FreeResponse => Answers::Text(correct),
    };
    let explanation_or_rubric = match format {
        QuestionFormat::MultipleChoice => explanation,
        QuestionFormat::FreeResponse => format!("Full credit for the correct value. {explanation}"),
    };
    QuestionDraft {
        format,
        stem,
        answers,
        explanation_or_rubric,
        topics: if topic.is_empty() { vec![] } else { vec![topic.to_owned()] },
        skills: vec!["Reading linear equations".into()],
        difficulty,
    }
}

/// Rotates the stem's integer literals by `k`; past a full rotation each
/// literal is also shifted by the number of completed turns.
pub fn generate_similar(source: &QuestionDraft, count: u32) -> Vec<QuestionDraft> {
    (1..=count as usize)
        .map(|k| {
            let mut d = source.clone();
            d.stem = rotate_literals(&source.stem, k);
            if d.stem == source.stem {
                d.stem = format!("{} (variant {k})", source.stem);
            }
            d
        })
        .collect()
}

fn rotate_literals(stem: &str, k: usize) -> String {
    let mut pieces: Vec<(bool, &str)> = Vec::new();
    let mut start = 0;
    let bytes = stem.as_bytes();
    while start < bytes.len() {
        let digit = bytes[start].is_ascii_digit();
        let mut end = start;
        while end < bytes.len() && bytes[end].is_ascii_digit() == digit {
            end += 1;
        }
        pieces.push((digit, &stem[start..end]));
        start = end;
    }
    let literals: Vec<u64> = pieces.iter().filter(|(d, _)| *d).filter_map(|(_, s)| s.parse().ok()).collect();
    let n = literals.len();
    if n == 0 || literals.len() != pieces.iter().filter(|(d, _)| *d).count() {
        return stem.to_owned();
    }
    let offset = (k / n) as u64;
    let mut j = 0;
    let mut out = String::with_capacity(stem.len());
    for (digit, s) in pieces {
        if digit {
            out.push_str(&(literals[(j + k) % n].saturating_add(offset)).to_string());
            j += 1;
        } else {
            out.push_str(s);
        }
    }
    out
}
