//! Math spans as self-contained SVG images.

use crate::math::{to_unicode, MathError};

/// An encoded image for one math span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MathImage {
    pub mime: &'static str,
    pub bytes: Vec<u8>,
}

/// Turns math source into an image. Implementations may fail per span; the
/// caller falls back to the raw source.
pub trait MathRenderer: Send + Sync {
    fn render(&self, source: &str, display: bool) -> Result<MathImage, MathError>;
}

/// Typesets the unicode linearization of the expression as SVG text.
#[derive(Debug, Clone, Copy, Default)]
pub struct SvgMathRenderer;

const INLINE_SIZE: f64 = 16.0;
const DISPLAY_SIZE: f64 = 20.0;

impl MathRenderer for SvgMathRenderer {
    fn render(&self, source: &str, display: bool) -> Result<MathImage, MathError> {
        let text = to_unicode(source)?;
        let size = if display { DISPLAY_SIZE } else { INLINE_SIZE };
        let width = (text.chars().map(char_em).sum::<f64>() * size).ceil().max(size * 0.5) + 4.0;
        let height = (size * 1.4).ceil();
        let baseline = (size * 1.05).round();
        let svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
             viewBox=\"0 0 {width} {height}\"><text x=\"2\" y=\"{baseline}\" \
             font-family=\"Cambria Math, STIX Two Math, Times New Roman, serif\" font-style=\"italic\" \
             font-size=\"{size}\">{}</text></svg>",
            super::html::escape(&text)
        );
        Ok(MathImage { mime: "image/svg+xml", bytes: svg.into_bytes() })
    }
}

fn char_em(c: char) -> f64 {
    match c {
        ' ' => 0.3,
        '(' | ')' | '[' | ']' | '|' | 'i' | 'j' | 'l' | '.' | ',' => 0.35,
        '²' | '³' | '¹' | '⁰'..='⁹' | '₀'..='₉' => 0.4,
        'm' | 'w' | 'M' | 'W' => 0.85,
        _ if c.is_ascii_lowercase() || c.is_ascii_digit() => 0.55,
        _ => 0.7,
    }
}
