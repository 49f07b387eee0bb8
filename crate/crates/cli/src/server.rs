//! REST service over a lake directory.
//!
//! Every body is JSON wrapped in an envelope carrying the schema version:
//! `{"version": 1, "data": ...}`; list endpoints add `total`, `limit` and
//! `offset`. Errors are `{"version": 1, "error": {"status", "message"}}`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path as UrlPath, Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lake_core::ingest::ingest_in_progress;
use lake_core::semantics::ThesaurusFile;
use lake_core::{GroupExpr, Lake, LakeError, Language, Method, ObjectId, TermQuery};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_LIMIT: usize = 50;
pub const MAX_LIMIT: usize = 10_000;
/// Seconds a client should wait before retrying during an ingest.
pub const RETRY_AFTER_SECS: u32 = 2;
pub const DEFAULT_RELATED_K: usize = 5;
pub const DEFAULT_TOP_K: usize = 10;

/// Shared handle: the open lake plus the generation it was loaded at.
/// An ingest by another process bumps the generation on disk and the
/// next request reopens the lake.
#[derive(Clone)]
pub struct AppState {
    root: PathBuf,
    lake: Arc<RwLock<Lake>>,
    loaded: Arc<AtomicU64>,
}

impl AppState {
    pub fn open(root: impl AsRef<Path>) -> lake_core::Result<AppState> {
        let lake = Lake::open(root.as_ref())?;
        Ok(AppState::new(lake))
    }

    pub fn new(lake: Lake) -> AppState {
        let generation = lake.generation();
        AppState {
            root: lake.root().to_path_buf(),
            lake: Arc::new(RwLock::new(lake)),
            loaded: Arc::new(AtomicU64::new(generation)),
        }
    }

    fn refresh(&self) -> Result<(), ApiError> {
        let on_disk = lake_core::lake::read_generation(&self.root);
        if on_disk == self.loaded.load(Ordering::Acquire) {
            return Ok(());
        }
        let mut guard = self.lake.write().unwrap_or_else(|e| e.into_inner());
        if lake_core::lake::read_generation(&self.root) != self.loaded.load(Ordering::Acquire) {
            let fresh = Lake::open(&self.root)?;
            self.loaded.store(fresh.generation(), Ordering::Release);
            *guard = fresh;
            tracing::info!(generation = on_disk, "reloaded lake");
        }
        Ok(())
    }

    fn read(&self) -> RwLockReadGuard<'_, Lake> {
        self.lake.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> RwLockWriteGuard<'_, Lake> {
        self.lake.write().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            message: message.into(),
        }
    }
}

pub fn status_of(e: &LakeError) -> StatusCode {
    match e {
        LakeError::NotFound { .. } => StatusCode::NOT_FOUND,
        LakeError::SqlSyntax { .. } => StatusCode::BAD_REQUEST,
        LakeError::Duplicate { .. }
        | LakeError::Kind { .. }
        | LakeError::InvalidArgument(_)
        | LakeError::Precondition(_)
        | LakeError::SqlValidation(_)
        | LakeError::Type(_) => StatusCode::UNPROCESSABLE_ENTITY,
        LakeError::Busy(_) => StatusCode::SERVICE_UNAVAILABLE,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<LakeError> for ApiError {
    fn from(e: LakeError) -> ApiError {
        ApiError::new(status_of(&e), e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "version": SCHEMA_VERSION,
            "error": { "status": self.status.as_u16(), "message": self.message },
        });
        let mut resp = (self.status, Json(body)).into_response();
        if self.status == StatusCode::SERVICE_UNAVAILABLE {
            resp.headers_mut()
                .insert(header::RETRY_AFTER, HeaderValue::from(RETRY_AFTER_SECS));
        }
        resp
    }
}

/// JSON body extractor that reports every decoding problem as 400.
pub struct Body<T>(pub T);

impl<S, T> FromRequest<S> for Body<T>
where
    Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let Json(v) = Json::<T>::from_request(req, state).await?;
        Ok(Body(v))
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

fn one<T: Serialize>(data: T) -> ApiResult {
    Ok(Json(json!({ "version": SCHEMA_VERSION, "data": data })))
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct Page {
    limit: Option<usize>,
    offset: Option<usize>,
}

fn page<T: Serialize>(items: Vec<T>, p: Page) -> ApiResult {
    let limit = p.limit.unwrap_or(DEFAULT_LIMIT);
    if limit == 0 || limit > MAX_LIMIT {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            format!("limit must be in 1..={MAX_LIMIT}"),
        ));
    }
    let offset = p.offset.unwrap_or(0);
    let total = items.len();
    let data: Vec<T> = items.into_iter().skip(offset).take(limit).collect();
    Ok(Json(json!({
        "version": SCHEMA_VERSION,
        "total": total,
        "limit": limit,
        "offset": offset,
        "data": data,
    })))
}

/// Refuses requests while an ingest holds the lake and picks up the
/// results of a finished one.
async fn barrier(State(state): State<AppState>, req: Request, next: Next) -> Response {
    if ingest_in_progress(&state.root) {
        return ApiError::from(LakeError::Busy("an ingest is running".into())).into_response();
    }
    if let Err(e) = state.refresh() {
        return e.into_response();
    }
    next.run(req).await
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/objects/{id}", get(object))
        .route("/objects/{id}/raw", get(raw))
        .route("/objects/{id}/related", get(related))
        .route("/tables/{id}/joinable", get(joinable))
        .route("/search", post(search))
        .route("/navigate", post(navigate))
        .route("/sql", post(sql))
        .route("/analytics/top-keywords", post(top_keywords))
        .route("/analytics/score-by-group", post(score_by_group))
        .route("/analytics/highlights", post(highlights))
        .route("/analytics/compare-groups", post(compare_groups))
        .route("/analytics/tuple-comparison", post(tuple_comparison))
        .route("/groupings", get(groupings))
        .route("/semantics/thesauri", get(thesauri).put(put_thesaurus))
        .route("/semantics/dictionaries", get(dictionaries).put(put_dictionary))
        .route("/stats", get(stats))
        .layer(middleware::from_fn_with_state(state.clone(), barrier))
        .with_state(state)
}

pub async fn serve(state: AppState, addr: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn parse_id(s: &str) -> Result<ObjectId, ApiError> {
    Ok(s.parse::<ObjectId>()?)
}

fn scope(lake: &Lake, expr: Option<&GroupExpr>) -> Result<Option<BTreeSet<ObjectId>>, ApiError> {
    Ok(match expr {
        Some(e) => Some(lake.navigate(e)?.into_iter().collect()),
        None => None,
    })
}

// ----- objects -------------------------------------------------------------

/// An object with its columns when it is a table.
pub fn object_view(lake: &Lake, id: ObjectId) -> lake_core::Result<Value> {
    let node = lake.object(id)?;
    let columns: Vec<_> = lake.catalog().columns(id).collect();
    let mut v = serde_json::to_value(node)?;
    if !columns.is_empty() {
        v["columns"] = serde_json::to_value(columns)?;
    }
    Ok(v)
}

async fn object(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let id = parse_id(&id)?;
    one(object_view(&s.read(), id)?)
}

async fn raw(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let id = parse_id(&id)?;
    let lake = s.read();
    let mime = lake
        .object(id)?
        .properties
        .get("mime_type")
        .and_then(|m| m.as_text())
        .unwrap_or("application/octet-stream")
        .to_string();
    let bytes = lake.raw(id)?;
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

#[derive(Debug, Deserialize)]
pub struct RelatedParams {
    k: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct Related {
    pub object: ObjectId,
    pub similarity: f64,
}

async fn related(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<RelatedParams>,
    Query(p): Query<Page>,
) -> ApiResult {
    let id = parse_id(&id)?;
    let hits = s.read().related(id, q.k.unwrap_or(DEFAULT_RELATED_K))?;
    page(
        hits.into_iter()
            .map(|(object, similarity)| Related { object, similarity })
            .collect(),
        p,
    )
}

async fn joinable(State(s): State<AppState>, UrlPath(id): UrlPath<String>, Query(p): Query<Page>) -> ApiResult {
    let id = parse_id(&id)?;
    page(s.read().joinable(id)?, p)
}

// ----- retrieval -----------------------------------------------------------

async fn search(State(s): State<AppState>, Query(p): Query<Page>, Body(q): Body<TermQuery>) -> ApiResult {
    page(s.read().search(&q)?, p)
}

async fn navigate(State(s): State<AppState>, Query(p): Query<Page>, Body(expr): Body<GroupExpr>) -> ApiResult {
    page(s.read().navigate(&expr)?, p)
}

#[derive(Debug, Deserialize)]
pub struct SqlRequest {
    pub sql: String,
}

async fn sql(State(s): State<AppState>, Query(p): Query<Page>, Body(req): Body<SqlRequest>) -> ApiResult {
    let t = s.read().sql(&req.sql)?;
    let Json(mut body) = page(t.rows_json(), p)?;
    body["columns"] = serde_json::to_value(&t.schema).expect("schema serializes");
    Ok(Json(body))
}

// ----- analytics -----------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopKeywordsRequest {
    #[serde(default)]
    pub k: Option<usize>,
    /// Restricts the ranking to the documents of a navigation result.
    #[serde(default)]
    pub scope: Option<GroupExpr>,
    #[serde(default)]
    pub dictionary: Option<String>,
}

async fn top_keywords(State(s): State<AppState>, Body(req): Body<TopKeywordsRequest>) -> ApiResult {
    let lake = s.read();
    let scope = scope(&lake, req.scope.as_ref())?;
    one(lake.top_keywords(
        scope.as_ref(),
        req.k.unwrap_or(DEFAULT_TOP_K),
        req.dictionary.as_deref(),
    )?)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreByGroupRequest {
    pub grouping: String,
    pub terms: Vec<String>,
    #[serde(default)]
    pub language: Option<Language>,
}

async fn score_by_group(State(s): State<AppState>, Body(req): Body<ScoreByGroupRequest>) -> ApiResult {
    let scores = s
        .read()
        .score_by_group(&req.grouping, &req.terms, req.language.unwrap_or(Language::English))?;
    one(scores)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HighlightsRequest {
    pub terms: Vec<String>,
    #[serde(default)]
    pub scope: Option<GroupExpr>,
    #[serde(default)]
    pub window: Option<usize>,
    #[serde(default)]
    pub max_snippets: Option<usize>,
}

async fn highlights(State(s): State<AppState>, Query(p): Query<Page>, Body(req): Body<HighlightsRequest>) -> ApiResult {
    let lake = s.read();
    let scope = scope(&lake, req.scope.as_ref())?;
    let snippets = lake.highlights(
        scope.as_ref(),
        &req.terms,
        req.window.unwrap_or(lake_core::indexer::DEFAULT_WINDOW),
        req.max_snippets.unwrap_or(lake_core::indexer::DEFAULT_MAX_SNIPPETS),
    )?;
    page(snippets, p)
}

#[derive(Debug, Deserialize)]
pub struct CompareGroupsRequest {
    pub grouping: String,
    #[serde(flatten)]
    pub method: Method,
}

async fn compare_groups(State(s): State<AppState>, Body(req): Body<CompareGroupsRequest>) -> ApiResult {
    one(s.read().compare_groups(&req.grouping, req.method)?)
}

#[derive(Debug, Deserialize)]
pub struct TupleComparisonRequest {
    pub sql: String,
    #[serde(flatten)]
    pub method: Method,
}

async fn tuple_comparison(State(s): State<AppState>, Body(req): Body<TupleComparisonRequest>) -> ApiResult {
    one(s.read().tuple_comparison(&req.sql, req.method)?)
}

// ----- catalog and semantics ---------------------------------------------

/// Every grouping with its groups and their sizes.
pub fn groupings_view(lake: &Lake) -> lake_core::Result<Vec<Value>> {
    let cat = lake.catalog();
    cat.groupings()
        .map(|g| {
            let groups = cat
                .groups(g.id)
                .map(|grp| Ok(json!({ "id": grp.id, "label": grp.label, "size": cat.members(grp.id)?.len() })))
                .collect::<lake_core::Result<Vec<_>>>()?;
            let mut v = serde_json::to_value(g)?;
            v["groups"] = Value::Array(groups);
            Ok(v)
        })
        .collect()
}

async fn groupings(State(s): State<AppState>, Query(p): Query<Page>) -> ApiResult {
    page(groupings_view(&s.read())?, p)
}

async fn thesauri(State(s): State<AppState>, Query(p): Query<Page>) -> ApiResult {
    page(s.read().semantics().thesauri().cloned().collect(), p)
}

#[derive(Debug, Deserialize)]
pub struct ThesaurusRequest {
    #[serde(flatten)]
    pub file: ThesaurusFile,
    #[serde(default)]
    pub language: Option<Language>,
}

async fn put_thesaurus(State(s): State<AppState>, Body(req): Body<ThesaurusRequest>) -> ApiResult {
    let mut lake = s.write();
    let id = lake
        .semantics_mut()
        .import_thesaurus(&req.file, req.language.unwrap_or(Language::English))?;
    one(lake.semantics().thesaurus(&id)?)
}

async fn dictionaries(State(s): State<AppState>, Query(p): Query<Page>) -> ApiResult {
    page(s.read().semantics().dictionaries().cloned().collect(), p)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryRequest {
    pub name: String,
    pub terms: Vec<String>,
    #[serde(default)]
    pub language: Option<Language>,
}

async fn put_dictionary(State(s): State<AppState>, Body(req): Body<DictionaryRequest>) -> ApiResult {
    let mut lake = s.write();
    let id =
        lake.semantics_mut()
            .upsert_dictionary(&req.name, &req.terms, req.language.unwrap_or(Language::English))?;
    one(lake.semantics().dictionary(&id)?)
}

async fn stats(State(s): State<AppState>) -> ApiResult {
    one(s.read().stats()?)
}
