//! Minimal PDF writer for assessments.
//!
//! Uses only the standard base-14 fonts, so nothing is embedded. Text goes
//! through WinAnsi where possible and through the Symbol font otherwise; the
//! Symbol font carries a ToUnicode map so the text layer extracts as the
//! original characters. Math spans are typeset as their unicode
//! linearization in Times-Italic.

use std::fmt::Write as _;

use super::{EXPLANATION_MARKER, KEY_MARKER, RUBRIC_MARKER};
use crate::math::to_unicode;
use crate::model::{option_letter, Answers, Assessment, Question, QuestionFormat};
use crate::spans::{detect_spans, SpanKind};

const PAGE_W: f64 = 612.0;
const PAGE_H: f64 = 792.0;
const MARGIN: f64 = 54.0;
const BODY_SIZE: f64 = 11.0;
const TITLE_SIZE: f64 = 16.0;
const LEADING: f64 = 1.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Face {
    Regular,
    Bold,
    Math,
    Mono,
}

/// Font resources in the page dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Font {
    Helvetica,
    HelveticaBold,
    TimesItalic,
    Courier,
    Symbol,
}

impl Font {
    const ALL: [Font; 5] = [Font::Helvetica, Font::HelveticaBold, Font::TimesItalic, Font::Courier, Font::Symbol];

    fn resource(self) -> &'static str {
        match self {
            Font::Helvetica => "F1",
            Font::HelveticaBold => "F2",
            Font::TimesItalic => "F3",
            Font::Courier => "F4",
            Font::Symbol => "F5",
        }
    }

    fn base_name(self) -> &'static str {
        match self {
            Font::Helvetica => "Helvetica",
            Font::HelveticaBold => "Helvetica-Bold",
            Font::TimesItalic => "Times-Italic",
            Font::Courier => "Courier",
            Font::Symbol => "Symbol",
        }
    }

    fn of(face: Face) -> Font {
        match face {
            Face::Regular => Font::Helvetica,
            Face::Bold => Font::HelveticaBold,
            Face::Math => Font::TimesItalic,
            Face::Mono => Font::Courier,
        }
    }
}

/// Helvetica advance widths for ASCII 32..=126, in thousandths of an em.
const HELVETICA: [u16; 95] = [
    278, 278, 355, 556, 556, 889, 667, 191, 333, 333, 389, 584, 278, 333, 278, 278, 556, 556, 556, 556, 556, 556, 556,
    556, 556, 556, 278, 278, 584, 584, 584, 556, 1015, 667, 667, 722, 722, 667, 611, 778, 722, 278, 500, 667, 556, 833,
    722, 778, 667, 778, 722, 667, 611, 722, 667, 944, 667, 667, 611, 278, 278, 278, 469, 556, 333, 556, 556, 500, 556,
    556, 278, 556, 556, 222, 222, 500, 222, 833, 556, 556, 556, 556, 333, 500, 278, 556, 500, 722, 500, 500, 500, 334,
    260, 334, 584,
];

fn char_width(face: Face, c: char) -> f64 {
    let base = match c {
        ' '..='~' => HELVETICA[c as usize - 32] as f64 / 1000.0,
        _ => 0.6,
    };
    match face {
        Face::Regular => base,
        Face::Bold => base * 1.06,
        Face::Math => base * 0.92,
        Face::Mono => 0.6,
    }
}

fn text_width(face: Face, text: &str, size: f64) -> f64 {
    text.chars().map(|c| char_width(face, c)).sum::<f64>() * size
}

/// WinAnsi code for `c`, if it has one.
fn win_ansi(c: char) -> Option<u8> {
    let u = c as u32;
    match u {
        0x20..=0x7E | 0xA0..=0xFF => Some(u as u8),
        _ => {
            const HIGH: [(char, u8); 27] = [
                ('€', 0x80),
                ('‚', 0x82),
                ('ƒ', 0x83),
                ('„', 0x84),
                ('…', 0x85),
                ('†', 0x86),
                ('‡', 0x87),
                ('ˆ', 0x88),
                ('‰', 0x89),
                ('Š', 0x8A),
                ('‹', 0x8B),
                ('Œ', 0x8C),
                ('Ž', 0x8E),
                ('‘', 0x91),
                ('’', 0x92),
                ('“', 0x93),
                ('”', 0x94),
                ('•', 0x95),
                ('–', 0x96),
                ('—', 0x97),
                ('˜', 0x98),
                ('™', 0x99),
                ('š', 0x9A),
                ('›', 0x9B),
                ('œ', 0x9C),
                ('ž', 0x9E),
                ('Ÿ', 0x9F),
            ];
            HIGH.iter().find(|(h, _)| *h == c).map(|(_, b)| *b)
        }
    }
}

/// Symbol-font codes for characters WinAnsi lacks.
const SYMBOL: &[(char, u8)] = &[
    ('−', 0x2D),
    ('∀', 0x22),
    ('∃', 0x24),
    ('∗', 0x2A),
    ('∴', 0x5C),
    ('⊥', 0x5E),
    ('Α', 0x41),
    ('Β', 0x42),
    ('Χ', 0x43),
    ('Δ', 0x44),
    ('Φ', 0x46),
    ('Γ', 0x47),
    ('Λ', 0x4C),
    ('Π', 0x50),
    ('Θ', 0x51),
    ('Σ', 0x53),
    ('Ω', 0x57),
    ('Ξ', 0x58),
    ('Ψ', 0x59),
    ('α', 0x61),
    ('β', 0x62),
    ('χ', 0x63),
    ('δ', 0x64),
    ('ε', 0x65),
    ('φ', 0x66),
    ('γ', 0x67),
    ('η', 0x68),
    ('ι', 0x69),
    ('κ', 0x6B),
    ('λ', 0x6C),
    ('μ', 0x6D),
    ('ν', 0x6E),
    ('π', 0x70),
    ('θ', 0x71),
    ('ρ', 0x72),
    ('σ', 0x73),
    ('τ', 0x74),
    ('υ', 0x75),
    ('ω', 0x77),
    ('ξ', 0x78),
    ('ψ', 0x79),
    ('ζ', 0x7A),
    ('∼', 0x7E),
    ('′', 0xA2),
    ('≤', 0xA3),
    ('∞', 0xA5),
    ('↔', 0xAB),
    ('←', 0xAC),
    ('↑', 0xAD),
    ('→', 0xAE),
    ('↓', 0xAF),
    ('″', 0xB2),
    ('≥', 0xB3),
    ('∝', 0xB5),
    ('∂', 0xB6),
    ('≠', 0xB9),
    ('≡', 0xBA),
    ('≈', 0xBB),
    ('ℵ', 0xC0),
    ('⊗', 0xC4),
    ('⊕', 0xC5),
    ('∅', 0xC6),
    ('∩', 0xC7),
    ('∪', 0xC8),
    ('⊃', 0xC9),
    ('⊇', 0xCA),
    ('⊄', 0xCB),
    ('⊂', 0xCC),
    ('⊆', 0xCD),
    ('∈', 0xCE),
    ('∉', 0xCF),
    ('∠', 0xD0),
    ('∇', 0xD1),
    ('∏', 0xD5),
    ('√', 0xD6),
    ('⋅', 0xD7),
    ('∧', 0xD9),
    ('∨', 0xDA),
    ('⇔', 0xDB),
    ('⇐', 0xDC),
    ('⇒', 0xDE),
    ('⟨', 0xE1),
    ('∑', 0xE5),
    ('⟩', 0xF1),
    ('∫', 0xF2),
];

fn symbol(c: char) -> Option<u8> {
    SYMBOL.iter().find(|(s, _)| *s == c).map(|(_, b)| *b)
}

/// ASCII stand-ins for characters neither font can show.
fn fallback(c: char) -> String {
    const SUP: &str = "⁰¹²³⁴⁵⁶⁷⁸⁹";
    const SUB: &str = "₀₁₂₃₄₅₆₇₈₉";
    if let Some(i) = SUP.chars().position(|s| s == c) {
        return format!("^{i}");
    }
    if let Some(i) = SUB.chars().position(|s| s == c) {
        return format!("_{i}");
    }
    match c {
        '⁺' => "^+".into(),
        '⁻' => "^-".into(),
        '⁽' => "^(".into(),
        '⁾' => "^)".into(),
        'ⁿ' => "^n".into(),
        'ⁱ' => "^i".into(),
        '\t' => " ".into(),
        _ => "?".into(),
    }
}

/// Splits text into runs of (font, encoded bytes).
fn encode(face: Face, text: &str) -> Vec<(Font, Vec<u8>)> {
    let mut runs: Vec<(Font, Vec<u8>)> = Vec::new();
    let mut push = |font: Font, byte: u8| match runs.last_mut() {
        Some((f, bytes)) if *f == font => bytes.push(byte),
        _ => runs.push((font, vec![byte])),
    };
    for c in text.chars() {
        if let Some(b) = win_ansi(c) {
            push(Font::of(face), b);
        } else if let Some(b) = symbol(c) {
            push(Font::Symbol, b);
        } else {
            for f in fallback(c).chars() {
                push(Font::of(face), f as u8);
            }
        }
    }
    runs
}

fn pdf_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() + 2);
    s.push('(');
    for &b in bytes {
        match b {
            b'(' | b')' | b'\\' => {
                s.push('\\');
                s.push(b as char);
            }
            0x20..=0x7E => s.push(b as char),
            _ => {
                let _ = write!(s, "\\{b:03o}");
            }
        }
    }
    s.push(')');
    s
}

#[derive(Debug, Clone)]
struct Piece {
    face: Face,
    text: String,
}

/// A laid-out line: indent plus pieces, already wrapped.
#[derive(Debug, Clone)]
struct Line {
    indent: f64,
    size: f64,
    pieces: Vec<Piece>,
    /// Extra space above the line.
    gap: f64,
}

/// Turns rich text into pieces, with `None` marking hard line breaks.
fn rich_pieces(text: &str, base: Face) -> Vec<Option<Piece>> {
    let mut out = Vec::new();
    let plain = |out: &mut Vec<Option<Piece>>, s: &str, face: Face| {
        for (i, line) in s.split('\n').enumerate() {
            if i > 0 {
                out.push(None);
            }
            if !line.is_empty() {
                out.push(Some(Piece { face, text: line.to_owned() }));
            }
        }
    };
    for span in detect_spans(text) {
        match span.kind {
            SpanKind::Plain => plain(&mut out, &span.source.replace("\\$", "$"), base),
            SpanKind::CodeBlock { .. } => {
                out.push(None);
                plain(&mut out, &span.source, Face::Mono);
                out.push(None);
            }
            SpanKind::MathInline | SpanKind::MathBlock => {
                let display = span.kind == SpanKind::MathBlock;
                if display {
                    out.push(None);
                }
                match to_unicode(&span.source) {
                    Ok(u) => plain(&mut out, &u, Face::Math),
                    Err(_) => plain(&mut out, &span.source, Face::Mono),
                }
                if display {
                    out.push(None);
                }
            }
        }
    }
    out
}

/// Greedy word wrap. Spaces inside math or code never break.
fn wrap(pieces: Vec<Option<Piece>>, indent: f64, size: f64, gap: f64) -> Vec<Line> {
    let max = PAGE_W - 2.0 * MARGIN - indent;
    let mut lines = Vec::new();
    let mut current: Vec<Piece> = Vec::new();
    let mut width = 0.0;
    let mut first = true;
    let flush = |lines: &mut Vec<Line>, current: &mut Vec<Piece>, first: &mut bool| {
        let g = if *first { gap } else { 0.0 };
        *first = false;
        lines.push(Line { indent, size, pieces: std::mem::take(current), gap: g });
    };
    for piece in pieces {
        let Some(piece) = piece else {
            if !current.is_empty() {
                flush(&mut lines, &mut current, &mut first);
                width = 0.0;
            }
            continue;
        };
        let words: Vec<String> = if piece.face == Face::Regular || piece.face == Face::Bold {
            piece.text.split_inclusive(' ').map(str::to_owned).collect()
        } else {
            vec![piece.text.clone()]
        };
        for word in words {
            let w = text_width(piece.face, &word, size);
            let trimmed = text_width(piece.face, word.trim_end(), size);
            if width + trimmed > max && !current.is_empty() {
                flush(&mut lines, &mut current, &mut first);
                width = 0.0;
                if word.trim().is_empty() {
                    continue;
                }
            }
            match current.last_mut() {
                Some(p) if p.face == piece.face => p.text.push_str(&word),
                _ => current.push(Piece { face: piece.face, text: word }),
            }
            width += w;
        }
    }
    if !current.is_empty() {
        flush(&mut lines, &mut current, &mut first);
    }
    lines
}

fn layout(assessment: &Assessment, questions: &[Question], include_keys: bool) -> Vec<Line> {
    let mut lines = wrap(vec![Some(Piece { face: Face::Bold, text: assessment.name.clone() })], 0.0, TITLE_SIZE, 0.0);
    for (n, q) in questions.iter().enumerate() {
        let number_indent = 22.0;
        let mut stem = vec![Some(Piece { face: Face::Bold, text: format!("{}. ", n + 1) })];
        stem.extend(rich_pieces(&q.stem, Face::Regular));
        lines.extend(wrap(stem, 0.0, BODY_SIZE, BODY_SIZE));
        if let Answers::Options(options) = &q.answers {
            for (i, o) in options.iter().enumerate() {
                let mut p = vec![Some(Piece { face: Face::Regular, text: format!("{}. ", option_letter(i)) })];
                p.extend(rich_pieces(&o.text, Face::Regular));
                lines.extend(wrap(p, number_indent, BODY_SIZE, 2.0));
            }
        }
        if include_keys {
            let answer = match &q.answers {
                Answers::Options(options) => {
                    let i = options.iter().position(|o| o.is_correct).unwrap_or(0);
                    let mut p = vec![Some(Piece { face: Face::Regular, text: format!("{}. ", option_letter(i)) })];
                    p.extend(rich_pieces(&options[i].text, Face::Regular));
                    p
                }
                Answers::Text(t) => rich_pieces(t, Face::Regular),
            };
            let mut key = vec![Some(Piece { face: Face::Bold, text: format!("{KEY_MARKER}: ") })];
            key.extend(answer);
            lines.extend(wrap(key, number_indent, BODY_SIZE, 4.0));
            let label = match q.format {
                QuestionFormat::MultipleChoice => EXPLANATION_MARKER,
                QuestionFormat::FreeResponse => RUBRIC_MARKER,
            };
            let mut expl = vec![Some(Piece { face: Face::Bold, text: format!("{label} ") })];
            expl.extend(rich_pieces(&q.explanation_or_rubric, Face::Regular));
            lines.extend(wrap(expl, number_indent, BODY_SIZE, 2.0));
        }
    }
    lines
}

fn paginate(lines: &[Line]) -> Vec<String> {
    let mut pages = Vec::new();
    let mut content = String::new();
    let mut y = PAGE_H - MARGIN;
    for line in lines {
        let advance = line.size * LEADING + line.gap;
        if y - advance < MARGIN && !content.is_empty() {
            pages.push(std::mem::take(&mut content));
            y = PAGE_H - MARGIN;
        }
        y -= advance;
        let _ = writeln!(content, "BT 1 0 0 1 {:.2} {:.2} Tm", MARGIN + line.indent, y);
        for piece in &line.pieces {
            for (font, bytes) in encode(piece.face, &piece.text) {
                let _ = writeln!(content, "/{} {} Tf {} Tj", font.resource(), line.size, pdf_string(&bytes));
            }
        }
        content.push_str("ET\n");
    }
    if !content.is_empty() || pages.is_empty() {
        pages.push(content);
    }
    pages
}

fn symbol_cmap() -> String {
    let mut entries = String::new();
    for (c, code) in SYMBOL {
        let mut units = [0u16; 2];
        let hex: String = c.encode_utf16(&mut units).iter().map(|u| format!("{u:04X}")).collect();
        let _ = writeln!(entries, "<{code:02X}> <{hex}>");
    }
    format!(
        "/CIDInit /ProcSet findresource begin\n12 dict begin\nbegincmap\n\
         /CIDSystemInfo << /Registry (Adobe) /Ordering (UCS) /Supplement 0 >> def\n\
         /CMapName /Adobe-Identity-UCS def\n/CMapType 2 def\n\
         1 begincodespacerange\n<00> <FF>\nendcodespacerange\n\
         {} beginbfchar\n{entries}endbfchar\nendcmap\n\
         CMapName currentdict /CMap defineresource pop\nend\nend\n",
        SYMBOL.len()
    )
}

/// Text string for the document info dictionary: ASCII literal or UTF-16BE hex.
fn info_string(s: &str) -> String {
    if s.chars().all(|c| (' '..='~').contains(&c)) {
        pdf_string(s.as_bytes())
    } else {
        let hex: String = s.encode_utf16().map(|u| format!("{u:04X}")).collect();
        format!("<FEFF{hex}>")
    }
}

struct Writer {
    out: Vec<u8>,
    offsets: Vec<usize>,
}

impl Writer {
    fn object(&mut self, id: usize, body: &str) {
        self.offsets[id - 1] = self.out.len();
        self.out.extend_from_slice(format!("{id} 0 obj\n{body}\nendobj\n").as_bytes());
    }

    fn stream(&mut self, id: usize, dict_extra: &str, data: &str) {
        self.offsets[id - 1] = self.out.len();
        self.out.extend_from_slice(
            format!("{id} 0 obj\n<< /Length {}{dict_extra} >>\nstream\n{data}\nendstream\nendobj\n", data.len())
                .as_bytes(),
        );
    }
}

/// Renders the assessment. Output is deterministic for equal input.
pub fn render_pdf(assessment: &Assessment, questions: &[Question], include_keys: bool) -> Vec<u8> {
    let pages = paginate(&layout(assessment, questions, include_keys));

    // Object numbering: 1 catalog, 2 pages, 3 info, 4 cmap, 5.. fonts, then
    // a (page, content) pair per page.
    let font_base = 5;
    let page_base = font_base + Font::ALL.len();
    let total = page_base + 2 * pages.len() - 1;
    let mut w = Writer { out: Vec::new(), offsets: vec![0; total] };
    w.out.extend_from_slice(b"%PDF-1.4\n%\xE2\xE3\xCF\xD3\n");

    w.object(1, "<< /Type /Catalog /Pages 2 0 R >>");
    let kids: Vec<String> = (0..pages.len()).map(|i| format!("{} 0 R", page_base + 2 * i)).collect();
    w.object(2, &format!("<< /Type /Pages /Kids [{}] /Count {} >>", kids.join(" "), pages.len()));
    w.object(3, &format!("<< /Title {} /Producer (assay) >>", info_string(&assessment.name)));
    w.stream(4, "", &symbol_cmap());
    for (i, font) in Font::ALL.iter().enumerate() {
        let encoding = if *font == Font::Symbol {
            " /ToUnicode 4 0 R".to_owned()
        } else {
            " /Encoding /WinAnsiEncoding".to_owned()
        };
        w.object(
            font_base + i,
            &format!("<< /Type /Font /Subtype /Type1 /BaseFont /{}{encoding} >>", font.base_name()),
        );
    }
    let fonts: Vec<String> =
        Font::ALL.iter().enumerate().map(|(i, f)| format!("/{} {} 0 R", f.resource(), font_base + i)).collect();
    for (i, content) in pages.iter().enumerate() {
        let page_id = page_base + 2 * i;
        w.object(
            page_id,
            &format!(
                "<< /Type /Page /Parent 2 0 R /MediaBox [0 0 {PAGE_W} {PAGE_H}] /Resources << /Font << {} >> >> /Contents {} 0 R >>",
                fonts.join(" "),
                page_id + 1
            ),
        );
        w.stream(page_id + 1, "", content.trim_end());
    }

    let xref_at = w.out.len();
    let mut xref = format!("xref\n0 {}\n0000000000 65535 f \n", total + 1);
    for off in &w.offsets {
        let _ = writeln!(xref, "{off:010} 00000 n ");
    }
    let _ = write!(xref, "trailer\n<< /Size {} /Root 1 0 R /Info 3 0 R >>\nstartxref\n{xref_at}\n%%EOF\n", total + 1);
    w.out.extend_from_slice(xref.as_bytes());
    w.out
}
