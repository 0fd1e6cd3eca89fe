//! HTTP API. Every route lives under `/api`; bodies are canonical JSON and
//! errors are problem documents `{code, message, details}`.

use std::sync::Arc;

use assay_core::command::{CommandOrigin, CommandSort, ScopeTags};
use assay_core::engine::{Engine, ImportMode, SearchQuery};
use assay_core::error::{EngineError, ErrorClass};
use assay_core::llm::{DifficultyMix, Document, LlmError, QuestionCounts};
use assay_core::model::{
    AssessmentId, CommandId, CourseId, PartValue, ProposalId, QuestionDraft, QuestionId, QuestionPart,
};
use assay_core::proposal::Decision;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, FromRequest, FromRequestParts, Path, Query, Request, State};
use axum::http::request::Parts;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub type AppState = Arc<Engine>;

pub const REVISION_HEADER: &str = "x-expected-revision";

/// Upload limit; documents arrive base64-encoded inside JSON.
const BODY_LIMIT: usize = 32 * 1024 * 1024;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RouteSpec {
    pub method: &'static str,
    pub path: &'static str,
    /// Whether the route needs the `X-Expected-Revision` header.
    pub requires_revision: bool,
    pub summary: &'static str,
}

const fn route(method: &'static str, path: &'static str, requires_revision: bool, summary: &'static str) -> RouteSpec {
    RouteSpec { method, path, requires_revision, summary }
}

/// The machine-readable route manifest. Every entry is wired in [`router`].
pub const ROUTES: &[RouteSpec] = &[
    route("GET", "/api/routes", false, "This manifest"),
    route("POST", "/api/teachers", false, "Register a teacher; returns the teacher and a session"),
    route("GET", "/api/session", false, "The signed-in teacher"),
    route("POST", "/api/session", false, "Issue a fresh session token for the signed-in teacher"),
    route("DELETE", "/api/session", false, "Sign out"),
    route("GET", "/api/courses", false, "List courses"),
    route("POST", "/api/courses", false, "Create a course"),
    route("GET", "/api/courses/{course_id}", false, "Get a course"),
    route("GET", "/api/courses/{course_id}/assessments", false, "List a course's assessments"),
    route("POST", "/api/courses/{course_id}/assessments", false, "Create an assessment"),
    route("POST", "/api/courses/{course_id}/imports", false, "Create an assessment from exported JSON"),
    route("GET", "/api/assessments/{assessment_id}", false, "Assessment with questions, revision and composition"),
    route("GET", "/api/assessments/{assessment_id}/composition", false, "Counts by format and difficulty"),
    route("POST", "/api/assessments/{assessment_id}/questions", true, "Add a question"),
    route("PUT", "/api/assessments/{assessment_id}/order", true, "Reorder questions"),
    route("POST", "/api/assessments/{assessment_id}/shuffle", true, "Shuffle multiple-choice options with a seed"),
    route("POST", "/api/assessments/{assessment_id}/generate", true, "Generate questions from topics"),
    route(
        "POST",
        "/api/assessments/{assessment_id}/generate-from-document",
        true,
        "Generate questions from curriculum material",
    ),
    route("POST", "/api/assessments/{assessment_id}/import-document", true, "Import questions from an existing exam"),
    route("POST", "/api/assessments/{assessment_id}/import-question", true, "Copy a question from another assessment"),
    route("GET", "/api/assessments/{assessment_id}/export", false, "Export as json, pdf or html"),
    route("GET", "/api/questions/{question_id}", false, "Get a question"),
    route("DELETE", "/api/questions/{question_id}", true, "Delete a question"),
    route("GET", "/api/questions/{question_id}/history", false, "Full version history"),
    route("PUT", "/api/questions/{question_id}/parts/{part}", true, "Manually edit one part"),
    route("POST", "/api/questions/{question_id}/undo", true, "Undo the latest change"),
    route("POST", "/api/questions/{question_id}/duplicate", true, "Duplicate after itself"),
    route("POST", "/api/questions/{question_id}/similar", true, "Generate similar questions after it"),
    route("GET", "/api/questions/{question_id}/proposals", false, "List proposals"),
    route(
        "POST",
        "/api/questions/{question_id}/proposals",
        false,
        "Request an LLM edit of one part or the whole question",
    ),
    route("GET", "/api/proposals/{proposal_id}", false, "Get a proposal"),
    route("POST", "/api/proposals/{proposal_id}/resolve", true, "Accept or reject a proposal"),
    route("GET", "/api/commands", false, "List commands, sorted and filtered"),
    route("POST", "/api/commands", false, "Register a command"),
    route("GET", "/api/commands/{command_id}", false, "Get a command"),
    route("PUT", "/api/commands/{command_id}/scope", false, "Set scope tags"),
    route("GET", "/api/commands/{command_id}/usage", false, "Usage log"),
    route("POST", "/api/commands/{command_id}/apply", false, "Apply to questions, producing proposals"),
    route("GET", "/api/search", false, "Search questions across courses"),
];

// Errors

#[derive(Debug)]
pub enum ApiError {
    Engine(EngineError),
    RevisionRequired,
    BadRequest { code: &'static str, message: String },
    NoRoute,
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        ApiError::Engine(e)
    }
}

#[derive(Debug, Serialize)]
struct Problem {
    code: String,
    message: String,
    details: Value,
}

pub fn status_of(class: ErrorClass) -> StatusCode {
    match class {
        ErrorClass::Unauthorized => StatusCode::UNAUTHORIZED,
        ErrorClass::Forbidden => StatusCode::FORBIDDEN,
        ErrorClass::NotFound => StatusCode::NOT_FOUND,
        ErrorClass::Conflict => StatusCode::CONFLICT,
        ErrorClass::Invalid => StatusCode::UNPROCESSABLE_ENTITY,
        ErrorClass::Upstream => StatusCode::BAD_GATEWAY,
        ErrorClass::Internal => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

fn details(e: &EngineError) -> Value {
    match e {
        EngineError::VersionConflict { expected, actual } => json!({ "expected": expected, "actual": actual }),
        EngineError::StaleProposal { base, current } => json!({ "base_version": base, "current_version": current }),
        EngineError::Llm(LlmError::SchemaViolation { raw, .. }) => json!({ "raw": raw }),
        EngineError::Llm(err) => json!({ "provider_error": err.to_string() }),
        _ => Value::Null,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, problem) = match self {
            ApiError::Engine(e) => {
                let status = status_of(e.class());
                if status.is_server_error() {
                    tracing::error!(error = %e, "request failed");
                }
                (status, Problem { code: e.code().into(), message: e.to_string(), details: details(&e) })
            }
            ApiError::RevisionRequired => (
                StatusCode::PRECONDITION_REQUIRED,
                Problem {
                    code: "revision_required".into(),
                    message: format!("this route needs the {REVISION_HEADER} header"),
                    details: Value::Null,
                },
            ),
            ApiError::BadRequest { code, message } => {
                (StatusCode::UNPROCESSABLE_ENTITY, Problem { code: code.into(), message, details: Value::Null })
            }
            ApiError::NoRoute => (
                StatusCode::NOT_FOUND,
                Problem { code: "no_route".into(), message: "no such route".into(), details: Value::Null },
            ),
        };
        (status, Json(problem)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

// Extractors

fn bearer(parts: &Parts) -> Option<&str> {
    let v = parts.headers.get(header::AUTHORIZATION)?.to_str().ok()?;
    let (scheme, token) = v.split_once(' ')?;
    scheme.eq_ignore_ascii_case("bearer").then(|| token.trim())
}

/// The authenticated teacher.
pub struct Actor(pub assay_core::model::TeacherId);

impl FromRequestParts<AppState> for Actor {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let token = bearer(parts).ok_or(EngineError::Unauthorized)?;
        Ok(Actor(state.authenticate(token)?))
    }
}

/// The raw bearer token of an authenticated request.
pub struct Token(String);

impl FromRequestParts<AppState> for Token {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let token = bearer(parts).ok_or(EngineError::Unauthorized)?;
        state.authenticate(token)?;
        Ok(Token(token.to_owned()))
    }
}

/// The caller's expected assessment revision.
pub struct Expected(pub u64);

impl<S: Send + Sync> FromRequestParts<S> for Expected {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, Self::Rejection> {
        let v = parts.headers.get(REVISION_HEADER).ok_or(ApiError::RevisionRequired)?;
        v.to_str().ok().and_then(|s| s.trim().parse().ok()).map(Expected).ok_or_else(|| ApiError::BadRequest {
            code: "invalid_revision_header",
            message: format!("{REVISION_HEADER} must be a non-negative integer"),
        })
    }
}

/// JSON body with problem-document rejections.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e @ JsonRejection::MissingJsonContentType(_)) => {
                Err(ApiError::BadRequest { code: "unsupported_content_type", message: e.body_text() })
            }
            Err(e) => Err(ApiError::BadRequest { code: "invalid_body", message: e.body_text() }),
        }
    }
}

/// Query string with problem-document rejections.
pub struct Params<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for Params<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        Query::<T>::from_request_parts(parts, state)
            .await
            .map(|Query(v)| Params(v))
            .map_err(|e: QueryRejection| ApiError::BadRequest { code: "invalid_query", message: e.body_text() })
    }
}

fn created<T: Serialize>(v: T) -> Response {
    (StatusCode::CREATED, Json(v)).into_response()
}

// Request bodies

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NameBody {
    name: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegisterBody {
    display_name: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ImportJsonBody {
    document: Value,
    #[serde(default)]
    mode: ImportMode,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewQuestionBody {
    question: QuestionDraft,
    position: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OrderBody {
    question_ids: Vec<QuestionId>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ShuffleBody {
    seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateBody {
    topics: Vec<String>,
    counts: QuestionCounts,
    difficulty_mix: Option<DifficultyMix>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentBody {
    document: Document,
    counts: Option<QuestionCounts>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ImportQuestionBody {
    question_id: QuestionId,
    position: Option<usize>,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum ExportFormat {
    Json,
    Pdf,
    Html,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExportParams {
    format: ExportFormat,
    #[serde(default)]
    with_keys: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartBody {
    value: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CountBody {
    count: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProposalBody {
    /// Omitted for a whole-question edit.
    part: Option<QuestionPart>,
    instruction: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PendingParams {
    #[serde(default)]
    pending: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResolveBody {
    decision: Decision,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CommandListParams {
    #[serde(default)]
    sort: CommandSort,
    q: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewCommandBody {
    text: String,
    scope_tags: Vec<QuestionPart>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScopeBody {
    tags: Vec<QuestionPart>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApplyBody {
    question_ids: Vec<QuestionId>,
}

// Handlers

async fn routes() -> Json<&'static [RouteSpec]> {
    Json(ROUTES)
}

async fn register(State(e): State<AppState>, Body(b): Body<RegisterBody>) -> ApiResult<Response> {
    let teacher = e.register_teacher(&b.display_name)?;
    let session = e.issue_session(&teacher.id)?;
    Ok(created(json!({ "teacher": teacher, "session": session })))
}

async fn whoami(State(e): State<AppState>, Actor(a): Actor) -> ApiResult<Json<Value>> {
    let teacher = e.read(|s| s.teachers.get(&a).cloned()).ok_or_else(|| EngineError::UnknownTeacher(a.to_string()))?;
    Ok(Json(json!({ "teacher": teacher })))
}

async fn refresh_session(State(e): State<AppState>, Actor(a): Actor) -> ApiResult<Response> {
    Ok(created(e.issue_session(&a)?))
}

async fn sign_out(State(e): State<AppState>, Token(t): Token) -> ApiResult<StatusCode> {
    e.revoke_session(&t)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn list_courses(State(e): State<AppState>, Actor(a): Actor) -> Json<Value> {
    Json(json!({ "courses": e.list_courses(&a) }))
}

async fn create_course(State(e): State<AppState>, Actor(a): Actor, Body(b): Body<NameBody>) -> ApiResult<Response> {
    Ok(created(e.create_course(&a, &b.name)?))
}

async fn get_course(State(e): State<AppState>, Actor(a): Actor, Path(id): Path<CourseId>) -> ApiResult<Response> {
    Ok(Json(e.get_course(&a, &id)?).into_response())
}

async fn list_assessments(
    State(e): State<AppState>,
    Actor(a): Actor,
    Path(id): Path<CourseId>,
) -> ApiResult<Json<Value>> {
    Ok(Json(json!({ "assessments": e.list_assessments(&a, &id)? })))
}

async fn create_assessment(
    State(e): State<AppState>,
    Actor(a): Actor,
    Path(id): Path<CourseId>,
    Body(b): Body<NameBody>,
) -> ApiResult<Response> {
    let created_assessment = e.create_assessment(&a, &id, &b.name)?;
    Ok(created(e.get_assessment(&a, &created_assessment.id)?))
}

async fn import_json(
    State(e): State<AppState>,
    Actor(a): Actor,
    Path(id): Path<CourseId>,
    Body(b): Body<ImportJsonBody>,
) -> ApiResult<Response> {
    Ok(created(e.import_json(&a, &id, &b.document.to_string(), b.mode)?))
}

async fn get_assessment(
    State(e): State<AppState>,
    Actor(a): Actor,
    Path(id): Path<AssessmentId>,
) -> ApiResult<Response> {
    Ok(Json(e.get_assessment(&a, &id)?).into_response())
}

async fn composition(State(e): State<AppState>, Actor(a): Actor, Path(id): Path<AssessmentId>) -> ApiResult<Response> {
    Ok(Json(e.get_composition(&a, &id)?).into_response())
}

async fn add_question(
    State(e): State<AppState>,
    Actor(a): Actor,
    Expected(rev): Expected,
    Path(id): Path<AssessmentId>,
    Body(b): Body<NewQuestionBody>,
) -> ApiResult<Response> {
    Ok(created(e.create_question(&a, &id, b.question, b.position, Some(rev))?))
}

async fn reorder(
    State(e): State<AppState>,
    Actor(a): Actor,
    Expected(rev): Expected,
    Path(id): Path<AssessmentId>,
    Body(b): Body<OrderBody>,
) -> ApiResult<Json<Value>> {
    Ok(Json(json!({ "revision": e.reorder_questions(&a, &id, b.question_ids, Some(rev))? })))
}

async fn shuffle(
    State(e): State<AppState>,
    Actor(a): Actor,
    Expected(rev): Expected,
    Path(id): Path<AssessmentId>,
    Body(b): Body<ShuffleBody>,
) -> ApiResult<Response> {
    Ok(Json(e.shuffle_mc_options(&a, &id, b.seed, Some(rev))?).into_response())
}

async fn generate(
    State(e): State<AppState>,
    Actor(a): Actor,
    Expected(rev): Expected,
    Path(id): Path<AssessmentId>,
    Body(b): Body<GenerateBody>,
) -> ApiResult<Response> {
    Ok(created(e.generate_from_topics(&a, &id, b.topics, b.counts, b.difficulty_mix, Some(rev)).await?))
}

async fn generate_from_document(
    State(e): State<AppState>,
    Actor(a): Actor,
    Expected(rev): Expected,
    Path(id): Path<AssessmentId>,
    Body(b): Body<DocumentBody>,
) -> ApiResult<Response> {
    let counts = b.counts.ok_or_else(|| EngineError::InvalidArgument("counts are required".into()))?;
    Ok(created(e.generate_from_document(&a, &id, b.document, counts, Some(rev)).await?))
}

async fn import_document(
    State(e): State<AppState>,
    Actor(a): Actor,
    Expected(rev): Expected,
    Path(id): Path<AssessmentId>,
    Body(b): Body<DocumentBody>,
) -> ApiResult<Response> {
    Ok(created(e.import_document(&a, &id, b.document, Some(rev)).await?))
}

async fn import_question(
    State(e): State<AppState>,
    Actor(a): Actor,
    Expected(rev): Expected,
    Path(id): Path<AssessmentId>,
    Body(b): Body<ImportQuestionBody>,
) -> ApiResult<Response> {
    Ok(created(e.import_question(&a, &id, &b.question_id, b.position, Some(rev))?))
}

async fn export(
    State(e): State<AppState>,
    Actor(a): Actor,
    Path(id): Path<AssessmentId>,
    Params(p): Params<ExportParams>,
) -> ApiResult<Response> {
    let (mime, ext, bytes) = match p.format {
        ExportFormat::Json => ("application/json", "json", e.export_json(&a, &id)?.into_bytes()),
        ExportFormat::Pdf => ("application/pdf", "pdf", e.export_pdf(&a, &id, p.with_keys)?),
        ExportFormat::Html => ("text/html; charset=utf-8", "html", e.export_html(&a, &id, p.with_keys)?.into_bytes()),
    };
    let disposition = format!("attachment; filename=\"{id}.{ext}\"");
    let mut resp = bytes.into_response();
    resp.headers_mut().insert(header::CONTENT_TYPE, HeaderValue::from_static(mime));
    if let Ok(v) = HeaderValue::from_str(&disposition) {
        resp.headers_mut().insert(header::CONTENT_DISPOSITION, v);
    }
    Ok(resp)
}

async fn get_question(State(e): State<AppState>, Actor(a): Actor, Path(id): Path<QuestionId>) -> ApiResult<Response> {
    Ok(Json(e.get_question(&a, &id)?).into_response())
}

async fn delete_question(
    State(e): State<AppState>,
    Actor(a): Actor,
    Expected(rev): Expected,
    Path(id): Path<QuestionId>,
) -> ApiResult<Json<Value>> {
    Ok(Json(json!({ "revision": e.delete_question(&a, &id, Some(rev))? })))
}

async fn history(State(e): State<AppState>, Actor(a): Actor, Path(id): Path<QuestionId>) -> ApiResult<Json<Value>> {
    Ok(Json(json!({ "versions": e.question_history(&a, &id)? })))
}

async fn edit_part(
    State(e): State<AppState>,
    Actor(a): Actor,
    Expected(rev): Expected,
    Path((id, part)): Path<(QuestionId, String)>,
    Body(b): Body<PartBody>,
) -> ApiResult<Response> {
    let part: QuestionPart = part.parse().map_err(EngineError::InvalidArgument)?;
    let value = PartValue::from_json(part, b.value)
        .map_err(|err| EngineError::InvalidContent(format!("{} value: {err}", part.label())))?;
    Ok(Json(e.manual_edit(&a, &id, part, value, Some(rev)).await?).into_response())
}

async fn undo(
    State(e): State<AppState>,
    Actor(a): Actor,
    Expected(rev): Expected,
    Path(id): Path<QuestionId>,
) -> ApiResult<Response> {
    Ok(Json(e.undo_question(&a, &id, Some(rev))?).into_response())
}

async fn duplicate(
    State(e): State<AppState>,
    Actor(a): Actor,
    Expected(rev): Expected,
    Path(id): Path<QuestionId>,
) -> ApiResult<Response> {
    Ok(created(e.duplicate_question(&a, &id, Some(rev))?))
}

async fn similar(
    State(e): State<AppState>,
    Actor(a): Actor,
    Expected(rev): Expected,
    Path(id): Path<QuestionId>,
    Body(b): Body<CountBody>,
) -> ApiResult<Response> {
    Ok(created(e.generate_similar(&a, &id, b.count, Some(rev)).await?))
}

async fn list_proposals(
    State(e): State<AppState>,
    Actor(a): Actor,
    Path(id): Path<QuestionId>,
    Params(p): Params<PendingParams>,
) -> ApiResult<Json<Value>> {
    Ok(Json(json!({ "proposals": e.list_proposals(&a, &id, p.pending)? })))
}

async fn propose(
    State(e): State<AppState>,
    Actor(a): Actor,
    Path(id): Path<QuestionId>,
    Body(b): Body<ProposalBody>,
) -> ApiResult<Response> {
    let proposed = match b.part {
        Some(part) => e.propose_part_edit(&a, &id, part, &b.instruction).await?,
        None => e.propose_question_edit(&a, &id, &b.instruction).await?,
    };
    Ok(created(proposed))
}

async fn get_proposal(State(e): State<AppState>, Actor(a): Actor, Path(id): Path<ProposalId>) -> ApiResult<Response> {
    Ok(Json(e.get_proposal(&a, &id)?).into_response())
}

async fn resolve(
    State(e): State<AppState>,
    Actor(a): Actor,
    Expected(rev): Expected,
    Path(id): Path<ProposalId>,
    Body(b): Body<ResolveBody>,
) -> ApiResult<Response> {
    Ok(Json(e.resolve_proposal(&a, &id, b.decision, Some(rev))?).into_response())
}

async fn list_commands(
    State(e): State<AppState>,
    Actor(a): Actor,
    Params(p): Params<CommandListParams>,
) -> Json<Value> {
    Json(json!({ "commands": e.list_commands(&a, p.sort, p.q.as_deref()) }))
}

async fn register_command(
    State(e): State<AppState>,
    Actor(a): Actor,
    Body(b): Body<NewCommandBody>,
) -> ApiResult<Response> {
    let tags = ScopeTags::new(b.scope_tags).map_err(EngineError::from)?;
    let registration = e.register_command(&a, &b.text, tags, CommandOrigin::TypedByUser).await?;
    let command = e.get_command(&a, registration.command_id())?;
    Ok(created(json!({ "registration": registration, "command": command })))
}

async fn get_command(State(e): State<AppState>, Actor(a): Actor, Path(id): Path<CommandId>) -> ApiResult<Response> {
    Ok(Json(e.get_command(&a, &id)?).into_response())
}

async fn set_scope(
    State(e): State<AppState>,
    Actor(a): Actor,
    Path(id): Path<CommandId>,
    Body(b): Body<ScopeBody>,
) -> ApiResult<Response> {
    Ok(Json(e.set_scope_tags(&a, &id, b.tags)?).into_response())
}

async fn usage(State(e): State<AppState>, Actor(a): Actor, Path(id): Path<CommandId>) -> ApiResult<Json<Value>> {
    Ok(Json(json!({ "events": e.command_usage(&a, &id)? })))
}

async fn apply(
    State(e): State<AppState>,
    Actor(a): Actor,
    Path(id): Path<CommandId>,
    Body(b): Body<ApplyBody>,
) -> ApiResult<Json<Value>> {
    Ok(Json(json!({ "results": e.apply_command(&a, &id, &b.question_ids).await? })))
}

async fn search(State(e): State<AppState>, Actor(a): Actor, Params(q): Params<SearchQuery>) -> Json<Value> {
    Json(json!({ "hits": e.search_questions(&a, &q) }))
}

async fn no_route() -> ApiError {
    ApiError::NoRoute
}

pub fn router(engine: AppState) -> Router {
    Router::new()
        .route("/api/routes", get(routes))
        .route("/api/teachers", post(register))
        .route("/api/session", get(whoami).post(refresh_session).delete(sign_out))
        .route("/api/courses", get(list_courses).post(create_course))
        .route("/api/courses/{course_id}", get(get_course))
        .route("/api/courses/{course_id}/assessments", get(list_assessments).post(create_assessment))
        .route("/api/courses/{course_id}/imports", post(import_json))
        .route("/api/assessments/{assessment_id}", get(get_assessment))
        .route("/api/assessments/{assessment_id}/composition", get(composition))
        .route("/api/assessments/{assessment_id}/questions", post(add_question))
        .route("/api/assessments/{assessment_id}/order", put(reorder))
        .route("/api/assessments/{assessment_id}/shuffle", post(shuffle))
        .route("/api/assessments/{assessment_id}/generate", post(generate))
        .route("/api/assessments/{assessment_id}/generate-from-document", post(generate_from_document))
        .route("/api/assessments/{assessment_id}/import-document", post(import_document))
        .route("/api/assessments/{assessment_id}/import-question", post(import_question))
        .route("/api/assessments/{assessment_id}/export", get(export))
        .route("/api/questions/{question_id}", get(get_question).delete(delete_question))
        .route("/api/questions/{question_id}/history", get(history))
        .route("/api/questions/{question_id}/parts/{part}", put(edit_part))
        .route("/api/questions/{question_id}/undo", post(undo))
        .route("/api/questions/{question_id}/duplicate", post(duplicate))
        .route("/api/questions/{question_id}/similar", post(similar))
        .route("/api/questions/{question_id}/proposals", get(list_proposals).post(propose))
        .route("/api/proposals/{proposal_id}", get(get_proposal))
        .route("/api/proposals/{proposal_id}/resolve", post(resolve))
        .route("/api/commands", get(list_commands).post(register_command))
        .route("/api/commands/{command_id}", get(get_command))
        .route("/api/commands/{command_id}/scope", put(set_scope))
        .route("/api/commands/{command_id}/usage", get(usage))
        .route("/api/commands/{command_id}/apply", post(apply))
        .route("/api/search", get(search))
        .fallback(no_route)
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(engine)
}

/// Serializes [`ROUTES`] as shipped in `api/routes.json`.
pub fn manifest_json() -> String {
    let mut s = serde_json::to_string_pretty(&json!({ "version": 1, "routes": ROUTES })).expect("manifest serializes");
    s.push('\n');
    s
}
