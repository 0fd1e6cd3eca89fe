//! Self-contained HTML export. Every math span becomes an inline SVG image
//! carried in a data URI, so the document renders with no external fetches
//! and survives being pasted into other software.

use base64::Engine as _;

use super::svg::MathRenderer;
use super::{EXPLANATION_MARKER, KEY_MARKER, RUBRIC_MARKER};
use crate::model::{option_letter, Answers, Assessment, Question, QuestionFormat};
use crate::spans::{detect_spans, SpanKind};

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

const STYLE: &str = "body{font-family:Helvetica,Arial,sans-serif;max-width:48em;margin:2em auto;line-height:1.45}\
ol.questions>li{margin-bottom:1.2em}ol.options{list-style:upper-alpha}\
img.math{vertical-align:middle}div.math-block{text-align:center;margin:.5em 0}\
.key{margin-top:.4em;padding-left:.8em;border-left:3px solid #999}\
pre{background:#f4f4f4;padding:.5em;overflow-x:auto}code.math-fallback{font-family:monospace}";

/// Renders rich text: plain runs escaped, math spans as images, code blocks
/// as preformatted text.
pub fn render_rich(text: &str, math: &dyn MathRenderer) -> String {
    let mut out = String::new();
    for span in detect_spans(text) {
        match &span.kind {
            SpanKind::Plain => out.push_str(&escape(&span.source.replace("\\$", "$")).replace('\n', "<br>")),
            SpanKind::CodeBlock { language } => {
                let class =
                    language.as_deref().map(|l| format!(" class=\"language-{}\"", escape(l))).unwrap_or_default();
                out.push_str(&format!("<pre><code{class}>{}</code></pre>", escape(&span.source)));
            }
            SpanKind::MathInline | SpanKind::MathBlock => {
                let display = span.kind == SpanKind::MathBlock;
                match math.render(&span.source, display) {
                    Ok(img) => {
                        let data = base64::engine::general_purpose::STANDARD.encode(&img.bytes);
                        let tag = format!(
                            "<img class=\"math\" alt=\"{}\" src=\"data:{};base64,{data}\">",
                            escape(&span.source),
                            img.mime
                        );
                        if display {
                            out.push_str(&format!("<div class=\"math-block\">{tag}</div>"));
                        } else {
                            out.push_str(&tag);
                        }
                    }
                    Err(e) => {
                        tracing::debug!(source = %span.source, error = %e, "math span falls back to source");
                        out.push_str(&format!("<code class=\"math-fallback\">{}</code>", escape(&span.source)));
                    }
                }
            }
        }
    }
    out
}

pub fn render_html(
    assessment: &Assessment,
    questions: &[Question],
    include_keys: bool,
    math: &dyn MathRenderer,
) -> String {
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    out.push_str(&format!("<title>{}</title>\n<style>{STYLE}</style>\n</head>\n<body>\n", escape(&assessment.name)));
    out.push_str(&format!("<h1>{}</h1>\n<ol class=\"questions\">\n", escape(&assessment.name)));
    for q in questions {
        out.push_str("<li class=\"question\">\n");
        out.push_str(&format!("<div class=\"stem\">{}</div>\n", render_rich(&q.stem, math)));
        if let Answers::Options(options) = &q.answers {
            out.push_str("<ol class=\"options\">\n");
            for o in options {
                out.push_str(&format!("<li>{}</li>\n", render_rich(&o.text, math)));
            }
            out.push_str("</ol>\n");
        }
        if include_keys {
            out.push_str("<div class=\"key\">\n");
            let answer = match &q.answers {
                Answers::Options(options) => options
                    .iter()
                    .position(|o| o.is_correct)
                    .map(|i| format!("{}. {}", option_letter(i), render_rich(&options[i].text, math)))
                    .unwrap_or_default(),
                Answers::Text(t) => render_rich(t, math),
            };
            out.push_str(&format!("<p><strong>{KEY_MARKER}:</strong> {answer}</p>\n"));
            let label = match q.format {
                QuestionFormat::MultipleChoice => EXPLANATION_MARKER,
                QuestionFormat::FreeResponse => RUBRIC_MARKER,
            };
            out.push_str(&format!(
                "<p><strong>{label}</strong> {}</p>\n</div>\n",
                render_rich(&q.explanation_or_rubric, math)
            ));
        }
        out.push_str("</li>\n");
    }
    out.push_str("</ol>\n</body>\n</html>\n");
    out
}
