//! Canonical assessment interchange document.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::model::{Assessment, Question, QuestionVersion};

pub const SCHEMA_VERSION: u32 = 1;

/// An assessment with its current questions and their full version history.
/// History is grouped by question in assessment order, oldest version first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssessmentDocument {
    pub schema_version: u32,
    pub assessment: Assessment,
    pub questions: Vec<Question>,
    pub history: Vec<QuestionVersion>,
}

impl AssessmentDocument {
    /// Pretty-printed, with a trailing newline. Field order is fixed by the
    /// type definitions, so equal documents give equal bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let doc: AssessmentDocument = serde_json::from_str(text).map_err(|e| e.to_string())?;
        doc.check()?;
        Ok(doc)
    }

    /// Structural checks beyond the JSON shape.
    pub fn check(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!("unsupported schema_version {}", self.schema_version));
        }
        if self.assessment.name.trim().is_empty() {
            return Err("assessment name is empty".into());
        }
        let ids: Vec<_> = self.questions.iter().map(|q| &q.id).collect();
        if self.assessment.question_ids.iter().collect::<Vec<_>>() != ids {
            return Err("assessment.question_ids does not list the questions in order".into());
        }
        if ids.iter().collect::<HashSet<_>>().len() != ids.len() {
            return Err("duplicate question id".into());
        }
        let mut history = self.history.iter();
        for q in &self.questions {
            q.validate().map_err(|e| format!("question {}: {e}", q.id))?;
            if q.version == 0 {
                return Err(format!("question {} has version 0", q.id));
            }
            for v in 1..=q.version {
                let h = history.next().ok_or_else(|| format!("history of {} ends before version {v}", q.id))?;
                if h.question_id != q.id || h.version != v || h.snapshot.id != q.id || h.snapshot.version != v {
                    return Err(format!("history entry for {} version {v} is out of place", q.id));
                }
                h.snapshot.validate().map_err(|e| format!("snapshot {} v{v}: {e}", q.id))?;
            }
            let last = &self.history[self.history.len() - history.len() - 1];
            if last.snapshot != *q {
                return Err(format!("latest snapshot of {} differs from the question", q.id));
            }
        }
        if history.next().is_some() {
            return Err("history holds entries for unknown questions".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use chrono::{TimeZone, Utc};

    use super::*;
    use crate::model::fixtures::*;
    use crate::model::{AssessmentId, CourseId, Provenance, QuestionId};

    fn doc() -> AssessmentDocument {
        let q = factoring_fr().into_question(QuestionId::from("q_1"), 1);
        let v = QuestionVersion {
            question_id: q.id.clone(),
            version: 1,
            snapshot: q.clone(),
            timestamp: Utc.with_ymd_and_hms(2025, 1, 2, 3, 4, 5).unwrap(),
            provenance: Provenance::Creation,
        };
        AssessmentDocument {
            schema_version: 1,
            assessment: Assessment {
                id: AssessmentId::from("asm_1"),
                course_id: CourseId::from("crs_1"),
                name: "Quiz".into(),
                question_ids: vec![q.id.clone()],
            },
            questions: vec![q],
            history: vec![v],
        }
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let text = doc().to_json();
        let back = AssessmentDocument::parse(&text).unwrap();
        assert_eq!(back, doc());
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn misspelled_field_rejected() {
        let text = doc().to_json().replace("\"explanation_or_rubric\"", "\"explanation\"");
        assert!(AssessmentDocument::parse(&text).is_err());
    }

    #[test]
    fn history_must_be_gapless() {
        let mut d = doc();
        d.questions[0].version = 2;
        assert!(d.check().unwrap_err().contains("ends before version 2"));
        let mut d = doc();
        d.history.clear();
        assert!(d.check().is_err());
        let mut d = doc();
        d.schema_version = 2;
        assert!(d.check().is_err());
    }
}
