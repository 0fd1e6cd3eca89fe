use thiserror::Error;

use crate::command::ScopeError;
use crate::llm::LlmError;
use crate::model::ValidationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    Unauthorized,
    Forbidden,
    NotFound,
    Conflict,
    Invalid,
    Upstream,
    Internal,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("missing, unknown or expired session")]
    Unauthorized,
    #[error("{0} belongs to another teacher")]
    NotOwner(String),
    #[error("unknown teacher {0}")]
    UnknownTeacher(String),
    #[error("unknown course {0}")]
    UnknownCourse(String),
    #[error("unknown assessment {0}")]
    UnknownAssessment(String),
    #[error("unknown question {0}")]
    UnknownQuestion(String),
    #[error("unknown proposal {0}")]
    UnknownProposal(String),
    #[error("unknown command {0}")]
    UnknownCommand(String),
    #[error("expected revision {expected}, assessment is at {actual}")]
    VersionConflict { expected: u64, actual: u64 },
    #[error("proposal was made against version {base}, question is at {current}")]
    StaleProposal { base: u32, current: u32 },
    #[error("proposal {0} is already resolved")]
    AlreadyResolved(String),
    #[error("question is at its first version; nothing to undo")]
    NothingToUndo,
    #[error("{0} already exists")]
    AlreadyExists(String),
    #[error("invalid question: {0}")]
    InvalidQuestion(#[from] ValidationError),
    #[error("invalid content: {0}")]
    InvalidContent(String),
    #[error("instruction is empty")]
    InvalidInstruction,
    #[error(transparent)]
    Scope(#[from] ScopeError),
    #[error("new order is not a permutation of the current questions")]
    NotAPermutation,
    #[error("no target questions given")]
    EmptyTargetList,
    #[error("assessment has no questions")]
    EmptyAssessment,
    #[error("document does not match the assessment schema: {0}")]
    SchemaViolation(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("language model failure: {0}")]
    Llm(#[from] LlmError),
    #[error("render failure: {0}")]
    RenderFailure(String),
    #[error("storage failure: {0}")]
    Storage(String),
}

impl EngineError {
    pub fn class(&self) -> ErrorClass {
        use EngineError::*;
        match self {
            Unauthorized => ErrorClass::Unauthorized,
            NotOwner(_) => ErrorClass::Forbidden,
            UnknownTeacher(_) | UnknownCourse(_) | UnknownAssessment(_) | UnknownQuestion(_) | UnknownProposal(_)
            | UnknownCommand(_) => ErrorClass::NotFound,
            VersionConflict { .. } | StaleProposal { .. } | AlreadyResolved(_) | NothingToUndo | AlreadyExists(_) => {
                ErrorClass::Conflict
            }
            InvalidQuestion(_) | InvalidContent(_) | InvalidInstruction | Scope(_) | NotAPermutation
            | EmptyTargetList | EmptyAssessment | SchemaViolation(_) | InvalidArgument(_) => ErrorClass::Invalid,
            Llm(e) if e.is_caller_error() => ErrorClass::Invalid,
            Llm(_) => ErrorClass::Upstream,
            RenderFailure(_) | Storage(_) => ErrorClass::Internal,
        }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        use EngineError::*;
        match self {
            Unauthorized => "unauthorized",
            NotOwner(_) => "not_owner",
            UnknownTeacher(_) => "unknown_teacher",
            UnknownCourse(_) => "unknown_course",
            UnknownAssessment(_) => "unknown_assessment",
            UnknownQuestion(_) => "unknown_question",
            UnknownProposal(_) => "unknown_proposal",
            UnknownCommand(_) => "unknown_command",
            VersionConflict { .. } | StaleProposal { .. } => "version_conflict",
            AlreadyResolved(_) => "already_resolved",
            NothingToUndo => "nothing_to_undo",
            AlreadyExists(_) => "already_exists",
            InvalidQuestion(_) => "invalid_question",
            InvalidContent(_) => "invalid_content",
            InvalidInstruction => "invalid_instruction",
            Scope(ScopeError::EmptyScope) => "empty_scope",
            Scope(ScopeError::InvalidTag(_)) => "invalid_tag",
            NotAPermutation => "not_a_permutation",
            EmptyTargetList => "empty_target_list",
            EmptyAssessment => "empty_assessment",
            SchemaViolation(_) => "schema_violation",
            InvalidArgument(_) => "invalid_argument",
            Llm(LlmError::EmptyRequest) => "empty_request",
            Llm(LlmError::UnsupportedMediaType(_)) => "unsupported_media_type",
            Llm(LlmError::InvalidArgument(_)) => "invalid_argument",
            Llm(_) => "llm_failure",
            RenderFailure(_) => "render_failure",
            Storage(_) => "storage_failure",
        }
    }
}
