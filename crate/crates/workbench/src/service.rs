//! The local HTTP service: JSON in, JSON out, one route per workbench
//! operation.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use grammar_forge::grammar::Location;
use grammar_forge::inference::AnnotatedExample;
use grammar_forge::optimize::{catalog, parse_config, print_config};
use serde::{Deserialize, Serialize};

use crate::session::{evolve, infer, ApiError, EntryInput, ErrorKind, MetamodelInput, Workbench};

pub const DEFAULT_PORT: u16 = 7341;

type Shared = State<Arc<Workbench>>;
type Body<T> = Result<Json<T>, JsonRejection>;

struct Failure(ApiError);

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        Failure(e)
    }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        let status = match self.0.kind {
            ErrorKind::BadRequest => StatusCode::BAD_REQUEST,
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::StaleRevision => StatusCode::CONFLICT,
            ErrorKind::Invalid => StatusCode::UNPROCESSABLE_ENTITY,
        };
        (status, Json(serde_json::json!({ "error": self.0 }))).into_response()
    }
}

type Reply<T> = Result<Json<T>, Failure>;

fn body<T>(b: Body<T>) -> Result<T, Failure> {
    b.map(|Json(v)| v)
        .map_err(|r| Failure(ApiError::new(ErrorKind::BadRequest, r.body_text())))
}

#[derive(Deserialize)]
struct CreateSession {
    metamodel: MetamodelInput,
    seed: Option<u64>,
    count: Option<usize>,
}

#[derive(Deserialize)]
struct ReplaceConfig {
    revision: u64,
    text: String,
}

#[derive(Deserialize)]
struct AddEntry {
    revision: u64,
    entry: EntryInput,
    position: Option<usize>,
}

#[derive(Deserialize)]
struct UpdateEntry {
    revision: u64,
    entry: EntryInput,
}

#[derive(Deserialize)]
struct RevisionQuery {
    revision: u64,
}

#[derive(Deserialize)]
struct Reorder {
    revision: u64,
    order: Vec<usize>,
}

#[derive(Deserialize)]
struct ImportProgram {
    revision: u64,
    name: String,
    text: String,
}

#[derive(Deserialize)]
struct Sampling {
    revision: u64,
    seed: u64,
    count: usize,
}

#[derive(Deserialize)]
struct ApplyStyle {
    revision: u64,
    name: String,
}

#[derive(Deserialize)]
struct InstallStyle {
    document: String,
    #[serde(default)]
    force: bool,
}

#[derive(Deserialize)]
struct SessionEvolve {
    metamodel: MetamodelInput,
}

#[derive(Deserialize)]
struct Evolve {
    metamodel: MetamodelInput,
    config: String,
    old_metamodel: Option<MetamodelInput>,
}

#[derive(Serialize)]
struct Export {
    revision: u64,
    grammar: String,
    config: String,
    report: String,
}

pub fn router(wb: Arc<Workbench>) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session).delete(delete_session))
        .route("/sessions/{id}/generated", get(generated))
        .route("/sessions/{id}/optimized", get(optimized))
        .route("/sessions/{id}/previews", get(previews))
        .route("/sessions/{id}/config", get(config).put(replace_config))
        .route("/sessions/{id}/config/entries", post(add_entry))
        .route("/sessions/{id}/config/entries/{index}", put(update_entry).delete(delete_entry))
        .route("/sessions/{id}/config/reorder", post(reorder))
        .route("/sessions/{id}/programs", post(import_program))
        .route("/sessions/{id}/sampling", put(sampling))
        .route("/sessions/{id}/candidates", post(candidates))
        .route("/sessions/{id}/style", post(apply_style))
        .route("/sessions/{id}/evolve", post(session_evolve))
        .route("/sessions/{id}/export", get(export))
        .route("/catalog", get(|| async { Json(catalog()) }))
        .route("/styles", get(list_styles).post(install_style))
        .route("/infer", post(infer_route))
        .route("/evolve", post(evolve_route))
        .with_state(wb)
}

async fn create_session(State(wb): Shared, b: Body<CreateSession>) -> Result<impl IntoResponse, Failure> {
    let req = body(b)?;
    let view = wb.create(req.metamodel.load()?, req.seed, req.count)?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn session(State(wb): Shared, Path(id): Path<String>) -> Reply<impl Serialize> {
    Ok(Json(wb.with(&id, |s| Ok(s.view()))?))
}

async fn delete_session(State(wb): Shared, Path(id): Path<String>) -> Result<StatusCode, Failure> {
    wb.delete(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn generated(State(wb): Shared, Path(id): Path<String>) -> Reply<impl Serialize> {
    Ok(Json(wb.with(&id, |s| Ok(s.generated()))?))
}

async fn optimized(State(wb): Shared, Path(id): Path<String>) -> Reply<impl Serialize> {
    Ok(Json(wb.with(&id, |s| Ok(s.optimized()))?))
}

async fn previews(State(wb): Shared, Path(id): Path<String>) -> Reply<impl Serialize> {
    Ok(Json(wb.with(&id, |s| Ok(s.previews()))?))
}

async fn config(State(wb): Shared, Path(id): Path<String>) -> Reply<impl Serialize> {
    Ok(Json(wb.with(&id, |s| Ok(s.config_view()))?))
}

async fn replace_config(State(wb): Shared, Path(id): Path<String>, b: Body<ReplaceConfig>) -> Reply<impl Serialize> {
    let req = body(b)?;
    Ok(Json(wb.with(&id, |s| s.replace_config(req.revision, &req.text))?))
}

async fn add_entry(State(wb): Shared, Path(id): Path<String>, b: Body<AddEntry>) -> Reply<impl Serialize> {
    let req = body(b)?;
    Ok(Json(wb.with(&id, |s| s.add_entry(req.revision, &req.entry, req.position))?))
}

async fn update_entry(
    State(wb): Shared,
    Path((id, index)): Path<(String, usize)>,
    b: Body<UpdateEntry>,
) -> Reply<impl Serialize> {
    let req = body(b)?;
    Ok(Json(wb.with(&id, |s| s.update_entry(req.revision, index, &req.entry))?))
}

async fn delete_entry(
    State(wb): Shared,
    Path((id, index)): Path<(String, usize)>,
    q: Result<Query<RevisionQuery>, axum::extract::rejection::QueryRejection>,
) -> Reply<impl Serialize> {
    let Query(q) = q.map_err(|r| Failure(ApiError::new(ErrorKind::BadRequest, r.body_text())))?;
    Ok(Json(wb.with(&id, |s| s.delete_entry(q.revision, index))?))
}

async fn reorder(State(wb): Shared, Path(id): Path<String>, b: Body<Reorder>) -> Reply<impl Serialize> {
    let req = body(b)?;
    Ok(Json(wb.with(&id, |s| s.reorder(req.revision, &req.order))?))
}

async fn import_program(State(wb): Shared, Path(id): Path<String>, b: Body<ImportProgram>) -> Reply<impl Serialize> {
    let req = body(b)?;
    Ok(Json(wb.with(&id, |s| s.import_program(req.revision, &req.name, &req.text))?))
}

async fn sampling(State(wb): Shared, Path(id): Path<String>, b: Body<Sampling>) -> Reply<impl Serialize> {
    let req = body(b)?;
    Ok(Json(wb.with(&id, |s| s.set_sampling(req.revision, req.seed, req.count))?))
}

async fn candidates(State(wb): Shared, Path(id): Path<String>, b: Body<Location>) -> Reply<impl Serialize> {
    let loc = body(b)?;
    Ok(Json(wb.with(&id, |s| s.candidates(&loc))?))
}

async fn apply_style(State(wb): Shared, Path(id): Path<String>, b: Body<ApplyStyle>) -> Reply<impl Serialize> {
    let req = body(b)?;
    let style = wb.style(&req.name)?;
    Ok(Json(wb.with(&id, |s| s.apply_style(req.revision, &style))?))
}

async fn session_evolve(State(wb): Shared, Path(id): Path<String>, b: Body<SessionEvolve>) -> Reply<impl Serialize> {
    let req = body(b)?;
    let m = req.metamodel.load()?;
    Ok(Json(wb.with(&id, |s| s.evolve(&m))?))
}

async fn export(State(wb): Shared, Path(id): Path<String>) -> Reply<impl Serialize> {
    Ok(Json(wb.with(&id, |s| {
        let o = s.optimized();
        Ok(Export {
            revision: o.revision,
            grammar: o.text,
            config: print_config(s.config()),
            report: o.report_text,
        })
    })?))
}

async fn list_styles(State(wb): Shared) -> Json<impl Serialize> {
    Json(wb.list_styles())
}

async fn install_style(State(wb): Shared, b: Body<InstallStyle>) -> Result<impl IntoResponse, Failure> {
    let req = body(b)?;
    Ok((StatusCode::CREATED, Json(wb.install_style(&req.document, req.force)?)))
}

async fn infer_route(b: Body<AnnotatedExample>) -> Reply<impl Serialize> {
    Ok(Json(infer(&body(b)?)?))
}

async fn evolve_route(b: Body<Evolve>) -> Reply<impl Serialize> {
    let req = body(b)?;
    let new = req.metamodel.load()?;
    let old = req.old_metamodel.as_ref().map(MetamodelInput::load).transpose()?;
    let cs = parse_config(&req.config).map_err(|e| ApiError::new(ErrorKind::Invalid, e.to_string()))?;
    Ok(Json(evolve(&new, &cs, old.as_ref())?))
}

/// Serves on `127.0.0.1:port` until the process ends.
pub async fn serve(wb: Arc<Workbench>, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(wb)).await
}
