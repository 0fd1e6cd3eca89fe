//! Word- and line-level text diffs for reviewing proposed edits.

use serde::{Deserialize, Serialize};
use similar::{Algorithm, DiffOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// Whitespace-delimited tokens, shown inline within one part.
    InlineWordDiff,
    /// Line tokens, shown as original and revised columns.
    SideBySide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HunkKind {
    Equal,
    Insert,
    Delete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub kind: HunkKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffDocument {
    pub granularity: Granularity,
    pub hunks: Vec<Hunk>,
}

impl DiffDocument {
    /// Concatenation of Equal and Delete hunks.
    pub fn original(&self) -> String {
        self.side(HunkKind::Delete)
    }

    /// Concatenation of Equal and Insert hunks.
    pub fn revised(&self) -> String {
        self.side(HunkKind::Insert)
    }

    pub fn is_unchanged(&self) -> bool {
        self.hunks.iter().all(|h| h.kind == HunkKind::Equal)
    }

    fn side(&self, keep: HunkKind) -> String {
        self.hunks.iter().filter(|h| h.kind == HunkKind::Equal || h.kind == keep).map(|h| h.text.as_str()).collect()
    }
}

/// Splits into alternating runs of whitespace and non-whitespace, so
/// punctuation stays attached to its word and concatenation is lossless.
fn word_tokens(text: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    let mut start = 0;
    let mut in_space = None;
    for (i, c) in text.char_indices() {
        let space = c.is_whitespace();
        match in_space {
            Some(prev) if prev != space => {
                tokens.push(&text[start..i]);
                start = i;
            }
            _ => {}
        }
        in_space = Some(space);
    }
    if start < text.len() {
        tokens.push(&text[start..]);
    }
    tokens
}

fn line_tokens(text: &str) -> Vec<&str> {
    text.split_inclusive('\n').collect()
}

pub fn compute_diff(original: &str, revised: &str, granularity: Granularity) -> DiffDocument {
    let (old, new) = match granularity {
        Granularity::InlineWordDiff => (word_tokens(original), word_tokens(revised)),
        Granularity::SideBySide => (line_tokens(original), line_tokens(revised)),
    };
    let ops = similar::capture_diff_slices(Algorithm::Myers, &old, &new);

    let mut hunks: Vec<Hunk> = Vec::new();
    let mut push = |kind: HunkKind, parts: &[&str]| {
        let text: String = parts.concat();
        if text.is_empty() {
            return;
        }
        match hunks.last_mut() {
            Some(last) if last.kind == kind => last.text.push_str(&text),
            _ => hunks.push(Hunk { kind, text }),
        }
    };
    for op in ops {
        match op {
            DiffOp::Equal { old_index, len, .. } => push(HunkKind::Equal, &old[old_index..old_index + len]),
            DiffOp::Delete { old_index, old_len, .. } => push(HunkKind::Delete, &old[old_index..old_index + old_len]),
            DiffOp::Insert { new_index, new_len, .. } => push(HunkKind::Insert, &new[new_index..new_index + new_len]),
            DiffOp::Replace { old_index, old_len, new_index, new_len } => {
                push(HunkKind::Delete, &old[old_index..old_index + old_len]);
                push(HunkKind::Insert, &new[new_index..new_index + new_len]);
            }
        }
    }
    if hunks.is_empty() {
        hunks.push(Hunk { kind: HunkKind::Equal, text: String::new() });
    }
    DiffDocument { granularity, hunks }
}
