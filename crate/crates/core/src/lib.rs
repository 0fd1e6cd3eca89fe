//! Assessment authoring engine with reviewable LLM edits and reusable,
//! scored edit commands.

pub mod clock;
pub mod command;
pub mod diff;
pub mod engine;
pub mod error;
pub mod export;
pub mod llm;
pub mod math;
pub mod model;
pub mod proposal;
pub mod spans;
pub mod store;
