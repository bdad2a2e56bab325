//! HTTP surface of the session engine.
//!
//! JSON in and out, except stage and component images, which are served as
//! binary PGM unless the client asks for `application/json`, in which case
//! the same PGM bytes come back base64-encoded.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use axum::extract::{Path, Query as UrlQuery, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use base64::Engine as _;
use photofit_core::assembler::{AssembleError, Layout};
use photofit_core::catalog::{
    validate_params, Catalog, CatalogError, ComponentKind, ComponentRecord, ParamSpec, Params,
    Query,
};
use photofit_core::image::{GrayImage, Threshold};
use photofit_core::pgm::save_pgm;
use photofit_core::session::{Session, SessionError, Stage, Status};
use photofit_core::tuning::{TuneConfig, ZeroCiPolicy};
use serde::{Deserialize, Serialize};

use crate::description::DescriptionDoc;
use crate::store::{SessionStore, StoreError};

pub const PGM_CONTENT_TYPE: &str = "image/x-portable-graymap";

pub struct AppState {
    pub catalog: Arc<Catalog>,
    pub sessions: SessionStore,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/schema", get(schema))
        .route("/components", get(list_components))
        .route("/components/{id}", get(get_component))
        .route("/components/{id}/image", get(component_image))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/description", put(put_description))
        .route("/sessions/{id}/selection", post(post_selection))
        .route("/sessions/{id}/assemble", post(post_assemble))
        .route("/sessions/{id}/tune", post(post_tune))
        .route("/sessions/{id}/nudge", post(post_nudge))
        .route("/sessions/{id}/image/{stage}", get(stage_image))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn session_not_found(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "SessionNotFound",
            format!("no session {id:?}"),
        )
    }

    fn record_not_found(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "RecordNotFound",
            format!("no component {id:?}"),
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.code.to_string(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        use StatusCode as S;
        let (status, code) = match &e {
            SessionError::MissingKind(_) => (S::UNPROCESSABLE_ENTITY, "MissingKind"),
            SessionError::KindMismatch { .. } => (S::UNPROCESSABLE_ENTITY, "KindMismatch"),
            SessionError::NotACandidate { .. } => (S::UNPROCESSABLE_ENTITY, "NotACandidate"),
            SessionError::NotMovable(_) => (S::UNPROCESSABLE_ENTITY, "NotMovable"),
            SessionError::MissingSelection(_) => (S::CONFLICT, "MissingSelection"),
            SessionError::IllegalTransition { .. } => (S::CONFLICT, "IllegalTransition"),
            SessionError::StageNotReady(_) => (S::CONFLICT, "StageNotReady"),
            SessionError::UnknownStage(_) => (S::NOT_FOUND, "UnknownStage"),
            SessionError::MissingRecord(_) => (S::INTERNAL_SERVER_ERROR, "MissingRecord"),
            SessionError::Assemble(a) => (
                S::UNPROCESSABLE_ENTITY,
                match a {
                    AssembleError::NoForeground => "NoForeground",
                    AssembleError::NegativeCoordinate { .. } => "NegativeCoordinate",
                    AssembleError::OutOfBounds { .. } => "OutOfBounds",
                    _ => "AssembleFailed",
                },
            ),
            SessionError::Tune(_) => (S::UNPROCESSABLE_ENTITY, "TuneFailed"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        let code = match e {
            CatalogError::UnknownKind(_) => "UnknownKind",
            _ => "CatalogError",
        };
        Self::new(StatusCode::BAD_REQUEST, code, e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        tracing::error!(error = %e, "snapshot write failed");
        Self::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "SnapshotFailed",
            e.to_string(),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaEntry {
    pub name: String,
    pub values: Vec<String>,
}

impl From<&ParamSpec> for SchemaEntry {
    fn from(s: &ParamSpec) -> Self {
        Self {
            name: s.name.to_string(),
            values: s.values.iter().map(|v| v.to_string()).collect(),
        }
    }
}

/// Parameter names and vocabularies per kind, for building description forms.
pub fn schema_payload() -> BTreeMap<ComponentKind, Vec<SchemaEntry>> {
    ComponentKind::ALL
        .iter()
        .map(|&k| (k, k.schema().iter().map(SchemaEntry::from).collect()))
        .collect()
}

async fn schema() -> Json<BTreeMap<ComponentKind, Vec<SchemaEntry>>> {
    Json(schema_payload())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub id: String,
    pub kind: ComponentKind,
    pub params: Params,
    pub source: String,
    pub width: usize,
    pub height: usize,
    pub has_mask: bool,
}

impl From<&ComponentRecord> for ComponentSummary {
    fn from(r: &ComponentRecord) -> Self {
        Self {
            id: r.id.clone(),
            kind: r.kind,
            params: r.params.clone(),
            source: r.source.clone(),
            width: r.image.width(),
            height: r.image.height(),
            has_mask: r.mask.is_some(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ComponentList {
    pub kind: ComponentKind,
    pub warnings: Vec<String>,
    pub matches: Vec<ComponentSummary>,
}

async fn list_components(
    State(state): State<Arc<AppState>>,
    UrlQuery(mut params): UrlQuery<HashMap<String, String>>,
) -> Result<Json<ComponentList>, ApiError> {
    let kind: ComponentKind = params
        .remove("kind")
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "MissingKind", "kind is required"))?
        .parse()?;
    let desired: Params = params.into_iter().collect();
    let warnings = validate_params(kind, &desired)
        .warnings
        .iter()
        .map(|w| w.to_string())
        .collect();
    let query = Query { kind, desired };
    let matches = state
        .catalog
        .match_query(&query)
        .into_iter()
        .map(ComponentSummary::from)
        .collect();
    Ok(Json(ComponentList {
        kind,
        warnings,
        matches,
    }))
}

async fn get_component(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<ComponentSummary>, ApiError> {
    let rec = state
        .catalog
        .get(&id)
        .ok_or_else(|| ApiError::record_not_found(&id))?;
    Ok(Json(rec.into()))
}

#[derive(Debug, Default, Deserialize)]
struct ComponentImageParams {
    #[serde(default)]
    mask: bool,
}

async fn component_image(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    UrlQuery(p): UrlQuery<ComponentImageParams>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let rec = state
        .catalog
        .get(&id)
        .ok_or_else(|| ApiError::record_not_found(&id))?;
    let img = if p.mask {
        rec.effective_mask().to_image()
    } else {
        rec.image.clone()
    };
    Ok(image_response(&img, &headers))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EncodedImage {
    pub width: usize,
    pub height: usize,
    pub pgm_base64: String,
}

fn wants_json(headers: &HeaderMap) -> bool {
    headers
        .get_all(header::ACCEPT)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .any(|v| v.contains("application/json"))
}

fn image_response(img: &GrayImage, headers: &HeaderMap) -> Response {
    let bytes = save_pgm(img);
    if wants_json(headers) {
        Json(EncodedImage {
            width: img.width(),
            height: img.height(),
            pgm_base64: base64::engine::general_purpose::STANDARD.encode(bytes),
        })
        .into_response()
    } else {
        ([(header::CONTENT_TYPE, PGM_CONTENT_TYPE)], bytes).into_response()
    }
}

/// What clients see of a session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub status: Status,
    pub description: DescriptionDoc,
    pub warnings: BTreeMap<ComponentKind, Vec<String>>,
    pub candidates: BTreeMap<ComponentKind, Vec<String>>,
    pub selections: BTreeMap<ComponentKind, String>,
    /// Placements with manual offsets applied.
    pub layout: Option<Layout>,
    pub offsets: BTreeMap<ComponentKind, (i64, i64)>,
    pub tune_config: Option<TuneConfig>,
    pub stages: Vec<Stage>,
    pub actions: usize,
}

impl From<&Session> for SessionView {
    fn from(s: &Session) -> Self {
        Self {
            id: s.id().to_string(),
            status: s.status(),
            description: DescriptionDoc::from_queries(s.description()),
            warnings: s
                .warnings()
                .iter()
                .map(|(k, ws)| (*k, ws.iter().map(|w| w.to_string()).collect()))
                .collect(),
            candidates: s.candidates().clone(),
            selections: s.selections().clone(),
            layout: s.effective_layout(),
            offsets: s.offsets().clone(),
            tune_config: s.tune_config().copied(),
            stages: s.computed_stages().collect(),
            actions: s.transcript().len(),
        }
    }
}

async fn create_session(
    State(state): State<Arc<AppState>>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let handle = state.sessions.create()?;
    let view = SessionView::from(&*handle.lock());
    tracing::info!(id = %view.id, "session created");
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let handle = state
        .sessions
        .get(&id)
        .ok_or_else(|| ApiError::session_not_found(&id))?;
    let view = SessionView::from(&*handle.lock());
    Ok(Json(view))
}

/// Applies `f` to a copy of the session, persists it and only then swaps it
/// in, holding the session lock throughout.
fn mutate(
    state: &AppState,
    id: &str,
    f: impl FnOnce(&mut Session, &Catalog) -> Result<(), SessionError>,
) -> Result<Json<SessionView>, ApiError> {
    let handle = state
        .sessions
        .get(id)
        .ok_or_else(|| ApiError::session_not_found(id))?;
    let mut guard = handle.lock();
    let mut next = guard.clone();
    f(&mut next, &state.catalog)?;
    state.sessions.persist(&next)?;
    *guard = next;
    Ok(Json(SessionView::from(&*guard)))
}

async fn put_description(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(doc): Json<DescriptionDoc>,
) -> Result<Json<SessionView>, ApiError> {
    let queries = doc.into_queries()?;
    mutate(&state, &id, |s, cat| s.submit_description(cat, queries))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SelectionRequest {
    pub kind: String,
    pub record_id: String,
}

async fn post_selection(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<SelectionRequest>,
) -> Result<Json<SessionView>, ApiError> {
    let kind: ComponentKind = req.kind.parse()?;
    mutate(&state, &id, |s, cat| {
        s.select_candidate(cat, kind, &req.record_id)
    })
}

async fn post_assemble(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    mutate(&state, &id, |s, cat| s.assemble(cat))
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct TuneRequest {
    #[serde(default)]
    pub threshold: u8,
    #[serde(default)]
    pub zero_ci_policy: ZeroCiPolicy,
}

async fn post_tune(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<TuneRequest>,
) -> Result<Json<SessionView>, ApiError> {
    let cfg = TuneConfig {
        component_threshold: Threshold(req.threshold),
        zero_ci_policy: req.zero_ci_policy,
    };
    mutate(&state, &id, |s, cat| s.tune(cat, cfg))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NudgeRequest {
    pub kind: String,
    pub d_row: i64,
    pub d_col: i64,
}

async fn post_nudge(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<NudgeRequest>,
) -> Result<Json<SessionView>, ApiError> {
    let kind: ComponentKind = req.kind.parse()?;
    mutate(&state, &id, |s, cat| {
        s.nudge(cat, kind, req.d_row, req.d_col)
    })
}

async fn stage_image(
    State(state): State<Arc<AppState>>,
    Path((id, stage)): Path<(String, String)>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let stage: Stage = stage.parse()?;
    let handle = state
        .sessions
        .get(&id)
        .ok_or_else(|| ApiError::session_not_found(&id))?;
    let img = handle.lock().stage(stage)?.clone();
    Ok(image_response(&img, &headers))
}
