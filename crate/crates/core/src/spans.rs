//! Splits rich text into plain, math and fenced-code spans.
//!
//! Grammar, scanned left to right:
//! - "```lang\n ... ```" is a code block (language tag optional);
//! - "$$ ... $$" is display math;
//! - "$ ... $" is inline math (no blank line inside, `\$` is a literal dollar).
//!
//! Unterminated or empty delimiters are plain text. The output always
//! partitions the input: ranges are contiguous, non-overlapping and cover
//! every byte.

use std::ops::Range;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum SpanKind {
    Plain,
    MathInline,
    MathBlock,
    CodeBlock { language: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextSpan {
    pub kind: SpanKind,
    /// Content without delimiters: the TeX source for math, the body for code.
    pub source: String,
    /// Byte range within the parent text, delimiters included.
    pub range: Range<usize>,
}

impl TextSpan {
    pub fn is_math(&self) -> bool {
        matches!(self.kind, SpanKind::MathInline | SpanKind::MathBlock)
    }
}

const FENCE: &str = "```";

pub fn detect_spans(text: &str) -> Vec<TextSpan> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut plain_start = 0;
    let mut i = 0;

    while i < bytes.len() {
        let found = match bytes[i] {
            b'`' if text[i..].starts_with(FENCE) => code_block(text, i),
            b'$' if !escaped(bytes, i) => {
                if text[i..].starts_with("$$") {
                    math_block(text, i)
                } else {
                    math_inline(text, i)
                }
            }
            _ => None,
        };
        match found {
            Some(span) => {
                if plain_start < span.range.start {
                    spans.push(plain(text, plain_start..span.range.start));
                }
                i = span.range.end;
                plain_start = i;
                spans.push(span);
            }
            None => {
                // Skip a whole run of backticks or dollars so an unmatched
                // opener is not re-read as a shorter opener.
                let c = bytes[i];
                if c == b'`' || c == b'$' {
                    while i < bytes.len() && bytes[i] == c {
                        i += 1;
                    }
                } else {
                    i += 1;
                }
            }
        }
    }
    if plain_start < text.len() {
        spans.push(plain(text, plain_start..text.len()));
    }
    spans
}

fn plain(text: &str, range: Range<usize>) -> TextSpan {
    TextSpan { kind: SpanKind::Plain, source: text[range.clone()].to_owned(), range }
}

fn escaped(bytes: &[u8], i: usize) -> bool {
    let mut n = 0;
    while n < i && bytes[i - 1 - n] == b'\\' {
        n += 1;
    }
    n % 2 == 1
}

fn code_block(text: &str, start: usize) -> Option<TextSpan> {
    let after_open = start + FENCE.len();
    let newline = after_open + text[after_open..].find('\n')?;
    let info = text[after_open..newline].trim();
    if info.contains('`') {
        return None;
    }
    let body_start = newline + 1;
    let close = body_start + text[body_start..].find(FENCE)?;
    let mut body = &text[body_start..close];
    body = body.strip_suffix('\n').unwrap_or(body);
    let language = (!info.is_empty()).then(|| info.to_owned());
    Some(TextSpan {
        kind: SpanKind::CodeBlock { language },
        source: body.to_owned(),
        range: start..close + FENCE.len(),
    })
}

fn math_block(text: &str, start: usize) -> Option<TextSpan> {
    let inner_start = start + 2;
    let close = inner_start + text[inner_start..].find("$$")?;
    let inner = &text[inner_start..close];
    if inner.trim().is_empty() {
        return None;
    }
    Some(TextSpan { kind: SpanKind::MathBlock, source: inner.to_owned(), range: start..close + 2 })
}

fn math_inline(text: &str, start: usize) -> Option<TextSpan> {
    let bytes = text.as_bytes();
    let inner_start = start + 1;
    let mut j = inner_start;
    while j < bytes.len() {
        match bytes[j] {
            b'$' if !escaped(bytes, j) => {
                let inner = &text[inner_start..j];
                if inner.trim().is_empty() {
                    return None;
                }
                return Some(TextSpan { kind: SpanKind::MathInline, source: inner.to_owned(), range: start..j + 1 });
            }
            b'\n' if text[j + 1..].starts_with('\n') || text[j + 1..].starts_with("\r\n") => return None,
            _ => {}
        }
        j += 1;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kinds(spans: &[TextSpan]) -> Vec<SpanKind> {
        spans.iter().map(|s| s.kind.clone()).collect()
    }

    /// Independent check that spans tile the input exactly.
    fn assert_partition(text: &str, spans: &[TextSpan]) {
        let mut at = 0;
        for s in spans {
            assert_eq!(s.range.start, at, "gap or overlap in {text:?}");
            assert!(s.range.end > s.range.start, "empty span in {text:?}");
            at = s.range.end;
        }
        assert_eq!(at, text.len());
    }

    #[test]
    fn inline_math() {
        let t = "Solve $x^2=4$ for x";
        let spans = detect_spans(t);
        assert_eq!(kinds(&spans), vec![SpanKind::Plain, SpanKind::MathInline, SpanKind::Plain]);
        assert_eq!(spans[1].source, "x^2=4");
        assert_eq!(&t[spans[1].range.clone()], "$x^2=4$");
        assert_partition(t, &spans);
    }

    #[test]
    fn no_math() {
        let spans = detect_spans("no math");
        assert_eq!(kinds(&spans), vec![SpanKind::Plain]);
        assert!(detect_spans("").is_empty());
    }

    #[test]
    fn code_then_math() {
        let t = "```python\nprint(1)\n``` and $a+b$";
        let spans = detect_spans(t);
        assert_eq!(
            kinds(&spans),
            vec![SpanKind::CodeBlock { language: Some("python".into()) }, SpanKind::Plain, SpanKind::MathInline]
        );
        assert_eq!(spans[0].source, "print(1)");
        assert_eq!(spans[1].source, " and ");
        assert_eq!(spans[2].source, "a+b");
        assert_partition(t, &spans);
    }

    #[test]
    fn display_math() {
        let t = "Evaluate $$\\int_0^1 x\\,dx$$ now";
        let spans = detect_spans(t);
        assert_eq!(kinds(&spans), vec![SpanKind::Plain, SpanKind::MathBlock, SpanKind::Plain]);
        assert_eq!(spans[1].source, "\\int_0^1 x\\,dx");
    }

    #[test]
    fn unterminated_degrades_to_plain() {
        for t in ["costs $5", "$$x", "```rust\nfn main() {}", "```", "$ $", "$$$$", "a \\$5 and \\$6"] {
            let spans = detect_spans(t);
            assert_eq!(kinds(&spans), vec![SpanKind::Plain], "{t:?}");
            assert_partition(t, &spans);
        }
    }

    #[test]
    fn blank_line_ends_inline_math() {
        let spans = detect_spans("$a\n\nb$");
        assert_eq!(kinds(&spans), vec![SpanKind::Plain]);
        let spans = detect_spans("$a\nb$");
        assert_eq!(kinds(&spans), vec![SpanKind::MathInline]);
    }

    #[test]
    fn code_without_language() {
        let spans = detect_spans("```\nx = 1\n```");
        assert_eq!(kinds(&spans), vec![SpanKind::CodeBlock { language: None }]);
        assert_eq!(spans[0].source, "x = 1");
    }

    #[test]
    fn dollars_inside_code_are_code() {
        let spans = detect_spans("```sh\necho $HOME\n```");
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].source, "echo $HOME");
    }

    proptest! {
        #[test]
        fn always_partitions(t in "[a-z$`\\\\\n ]{0,60}") {
            let spans = detect_spans(&t);
            assert_partition(&t, &spans);
        }

        #[test]
        fn partitions_unicode(t in "\\PC{0,60}") {
            assert_partition(&t, &detect_spans(&t));
        }
    }
}
