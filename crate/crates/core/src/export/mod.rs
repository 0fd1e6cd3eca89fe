//! Assessment export: canonical JSON, self-contained HTML and PDF.

mod html;
mod json;
mod pdf;
mod svg;

pub use html::{escape as escape_html, render_html, render_rich};
pub use json::{AssessmentDocument, SCHEMA_VERSION};
pub use pdf::render_pdf;
pub use svg::{MathImage, MathRenderer, SvgMathRenderer};

/// Section markers that only appear in exports with answer keys.
pub const KEY_MARKER: &str = "Answer key";
pub const EXPLANATION_MARKER: &str = "Explanation:";
pub const RUBRIC_MARKER: &str = "Suggested rubric:";
