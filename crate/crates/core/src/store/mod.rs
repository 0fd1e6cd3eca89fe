//! Durable, event-sourced storage: a journal of record batches and the state
//! they project to.

mod journal;
mod state;

pub use journal::{parse_journal, Batch, FileJournal, Journal, JournalError, MemoryJournal};
pub use state::{ApplyError, AssessmentEntry, IngestPurpose, IngestedDocument, QuestionEntry, Record, Session, State};
