//! Clears fractions from polynomial expressions by multiplying through by the
//! least common denominator: `x²−(3/2)x+1/2` becomes `2x²−3x+1`.
//!
//! Applies to math spans (`$...$`, equations allowed) and to bare words of
//! plain text that parse as a polynomial. Anything that does not parse is
//! left alone.

use crate::spans::{detect_spans, SpanKind};

#[derive(Debug, Clone, PartialEq, Eq)]
struct Term {
    num: i128,
    den: i128,
    /// Variable part exactly as written, e.g. `x²` or `x^{2}y`.
    vars: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Side {
    terms: Vec<Term>,
}

#[derive(Debug, Clone, Copy)]
struct Style {
    minus: char,
    spaced: bool,
}

const LIMIT: i128 = i64::MAX as i128;

/// True if `text` holds at least one fraction this transform would clear.
pub fn has_fractions(text: &str) -> bool {
    clear_fractions(text) != text
}

pub fn clear_fractions(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for span in detect_spans(text) {
        let raw = &text[span.range.clone()];
        match span.kind {
            SpanKind::MathInline | SpanKind::MathBlock => match clear_equation(&span.source) {
                Some(cleared) => {
                    let delim = if span.kind == SpanKind::MathBlock { "$$" } else { "$" };
                    out.push_str(delim);
                    out.push_str(&cleared);
                    out.push_str(delim);
                }
                None => out.push_str(raw),
            },
            SpanKind::Plain => out.push_str(&clear_plain(raw)),
            SpanKind::CodeBlock { .. } => out.push_str(raw),
        }
    }
    out
}

fn clear_plain(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while !rest.is_empty() {
        let ws = rest.len() - rest.trim_start().len();
        out.push_str(&rest[..ws]);
        rest = &rest[ws..];
        let word_len = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let word = &rest[..word_len];
        rest = &rest[word_len..];

        let core = word.trim_end_matches(['.', ',', ';', ':', '?', '!']);
        let tail = &word[core.len()..];
        match parse_side(core) {
            Some(side) if side.terms.len() >= 2 || side.terms.iter().any(|t| !t.vars.is_empty()) => {
                match scale(&mut [side]) {
                    Some(sides) => {
                        out.push_str(&format_side(&sides[0], style_of(core)));
                        out.push_str(tail);
                    }
                    None => out.push_str(word),
                }
            }
            _ => out.push_str(word),
        }
    }
    out
}

fn clear_equation(source: &str) -> Option<String> {
    let style = style_of(source);
    let eq_spaced = source.contains(" = ");
    let mut sides = source.split('=').map(parse_side).collect::<Option<Vec<_>>>()?;
    let sides = scale(&mut sides)?;
    let sep = if eq_spaced { " = " } else { "=" };
    let padded = source.starts_with(' ');
    let body = sides.iter().map(|s| format_side(s, style)).collect::<Vec<_>>().join(sep);
    Some(if padded { format!(" {body} ") } else { body })
}

fn style_of(source: &str) -> Style {
    let minus = if source.contains('−') { '−' } else { '-' };
    let spaced = [" + ", " - ", " − "].iter().any(|op| source.contains(op));
    Style { minus, spaced }
}

/// Multiplies every side by the LCD. None when nothing has a denominator or
/// the numbers overflow.
fn scale(sides: &mut [Side]) -> Option<Vec<Side>> {
    let mut lcd: i128 = 1;
    for t in sides.iter().flat_map(|s| &s.terms) {
        lcd = lcm(lcd, t.den)?;
    }
    if lcd == 1 {
        return None;
    }
    let mut out = Vec::with_capacity(sides.len());
    for s in sides.iter() {
        let mut terms = Vec::with_capacity(s.terms.len());
        for t in &s.terms {
            let num = t.num.checked_mul(lcd / t.den)?;
            if num.abs() > LIMIT {
                return None;
            }
            terms.push(Term { num, den: 1, vars: t.vars.clone() });
        }
        out.push(Side { terms });
    }
    Some(out)
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

fn lcm(a: i128, b: i128) -> Option<i128> {
    let l = (a / gcd(a, b)).checked_mul(b)?;
    (l <= LIMIT).then_some(l)
}

fn format_side(side: &Side, style: Style) -> String {
    let mut out = String::new();
    for (i, t) in side.terms.iter().enumerate() {
        let neg = t.num < 0;
        let mag = t.num.unsigned_abs();
        if i == 0 {
            if neg {
                out.push(style.minus);
            }
        } else {
            let op = if neg { style.minus } else { '+' };
            if style.spaced {
                out.push(' ');
                out.push(op);
                out.push(' ');
            } else {
                out.push(op);
            }
        }
        if mag != 1 || t.vars.is_empty() {
            out.push_str(&mag.to_string());
        }
        out.push_str(&t.vars);
    }
    out
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c == ' ' || c == '\t') {
            self.pos += 1;
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn int(&mut self) -> Option<i128> {
        let digits = self.rest().bytes().take_while(u8::is_ascii_digit).count();
        if digits == 0 || digits > 18 {
            return None;
        }
        let n = self.rest()[..digits].parse().ok()?;
        self.pos += digits;
        Some(n)
    }
}

fn parse_side(src: &str) -> Option<Side> {
    let mut c = Cursor { s: src, pos: 0 };
    let mut terms = Vec::new();
    c.skip_ws();
    let mut sign = sign_token(&mut c).unwrap_or(1);
    loop {
        c.skip_ws();
        let term = parse_term(&mut c, sign)?;
        terms.push(term);
        c.skip_ws();
        if c.peek().is_none() {
            break;
        }
        sign = sign_token(&mut c)?;
    }
    (!terms.is_empty()).then_some(Side { terms })
}

fn sign_token(c: &mut Cursor<'_>) -> Option<i128> {
    if c.eat("+") {
        Some(1)
    } else if c.eat("-") || c.eat("−") {
        Some(-1)
    } else {
        None
    }
}

fn parse_term(c: &mut Cursor<'_>, sign: i128) -> Option<Term> {
    let (num, den) = parse_coef(c).unwrap_or((1, 1));
    let had_coef = c.pos > 0;
    let vars_start = c.pos;
    while let Some(ch) = c.peek() {
        if !ch.is_ascii_lowercase() {
            break;
        }
        c.pos += 1;
        parse_power(c);
    }
    let vars = c.s[vars_start..c.pos].to_owned();
    if vars.is_empty() && !had_coef {
        return None;
    }
    if den == 0 {
        return None;
    }
    let g = gcd(num, den).max(1);
    Some(Term { num: sign * num / g, den: den / g, vars })
}

/// `3`, `3/2`, `(3/2)` or `\frac{3}{2}`.
fn parse_coef(c: &mut Cursor<'_>) -> Option<(i128, i128)> {
    let start = c.pos;
    let result = (|| {
        if c.eat("(") {
            let n = c.int()?;
            if !c.eat("/") {
                return None;
            }
            let d = c.int()?;
            if !c.eat(")") {
                return None;
            }
            return Some((n, d));
        }
        if c.eat("\\frac{") || c.eat("\\dfrac{") || c.eat("\\tfrac{") {
            let n = c.int()?;
            if !c.eat("}{") {
                return None;
            }
            let d = c.int()?;
            if !c.eat("}") {
                return None;
            }
            return Some((n, d));
        }
        let n = c.int()?;
        let before_slash = c.pos;
        if c.eat("/") {
            if let Some(d) = c.int() {
                return Some((n, d));
            }
            c.pos = before_slash;
        }
        Some((n, 1))
    })();
    if result.is_none() {
        c.pos = start;
    }
    result
}

fn parse_power(c: &mut Cursor<'_>) {
    let start = c.pos;
    if c.eat("^{") {
        if c.int().is_some() && c.eat("}") {
            return;
        }
        c.pos = start;
        return;
    }
    if c.eat("^") {
        if c.int().is_none() {
            c.pos = start;
        }
        return;
    }
    while c.peek().is_some_and(|ch| "⁰¹²³⁴⁵⁶⁷⁸⁹".contains(ch)) {
        c.pos += c.peek().unwrap().len_utf8();
    }
}
