//! HTTP session service for interactive modeling.
//!
//! Each session holds a working model. Edits (adding, deleting or editing
//! key views) serialize on a per-session lock and mark the session dirty;
//! `solve` rebuilds the frame evaluator and publishes it as a snapshot that
//! frame requests read without taking the lock. A dirty session answers
//! frame requests with `409 needs_solve`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Mutex;
use tower_http::cors::{Any, CorsLayer};

use toon25_core::document::{parse_key_view, parse_part_view, FrameDocument, KeyViewDocument};
use toon25_core::{
    load_model, quantize_view, save_model, solve_with_diagnostics, AnchorMethod, BlendParams,
    EulerAngles, FrameEvaluator, Model25, ModelError, PartDiagnostics, ShapeOptions, ViewRotation,
    WeightMethod,
};

/// JSON error body `{"error": kind, "detail": message}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: String,
    detail: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            status,
            kind: kind.into(),
            detail: detail.into(),
        }
    }

    fn bad_request(kind: &str, detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, kind, detail)
    }

    fn not_found(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", detail)
    }

    fn document(e: ModelError) -> Self {
        Self::new(StatusCode::BAD_REQUEST, e.kind(), e.to_string())
    }

    fn model(e: ModelError) -> Self {
        let status = match &e {
            ModelError::Validation(toon25_core::ValidationError::DuplicateKeyView { .. })
            | ModelError::EmptyModel => StatusCode::CONFLICT,
            _ => StatusCode::BAD_REQUEST,
        };
        Self::new(status, e.kind(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({"error": self.kind, "detail": self.detail})),
        )
            .into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewSettings {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub quantize: f64,
}

impl Default for ViewSettings {
    fn default() -> Self {
        Self {
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
            quantize: 0.0,
        }
    }
}

struct Working {
    model: Model25,
    dirty: bool,
}

struct Session {
    working: Mutex<Working>,
    /// Evaluator of the last solve; `None` while dirty.
    snapshot: RwLock<Option<Arc<FrameEvaluator>>>,
    /// Defaults for frame query parameters.
    view: RwLock<ViewSettings>,
}

impl Session {
    fn snapshot(&self) -> Option<Arc<FrameEvaluator>> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    fn invalidate(&self, w: &mut Working) {
        w.dirty = true;
        *self.snapshot.write().expect("snapshot lock") = None;
    }
}

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    next_id: AtomicU64,
}

impl AppState {
    fn session(&self, id: &str) -> ApiResult<Arc<Session>> {
        self.sessions
            .read()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session '{id}'")))
    }
}

/// Builds the router. `cors_origin` restricts cross-origin requests to one
/// origin; `None` allows any origin.
pub fn router(cors_origin: Option<HeaderValue>) -> Router {
    let cors = match cors_origin {
        Some(origin) => CorsLayer::new().allow_origin(origin),
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);
    Router::new()
        .route("/session", post(create_session))
        .route("/session/{id}", get(session_info))
        .route("/session/{id}/keyview", post(add_key_view))
        .route("/session/{id}/keyview/latest", delete(delete_key_view))
        .route("/session/{id}/solve", post(solve))
        .route("/session/{id}/frame", get(frame))
        .route("/session/{id}/view", put(set_view))
        .route("/session/{id}/part/{part_id}/keyview/{j}", put(edit_part))
        .route("/session/{id}/model", get(export_model))
        .with_state(Arc::new(AppState::default()))
        .layer(cors)
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let model = load_model(&body).map_err(ApiError::document)?;
    let n = state.next_id.fetch_add(1, Ordering::Relaxed) + 1;
    let id = format!("s{n}");
    let session = Session {
        working: Mutex::new(Working {
            model,
            dirty: true,
        }),
        snapshot: RwLock::new(None),
        view: RwLock::new(ViewSettings::default()),
    };
    state
        .sessions
        .write()
        .expect("sessions lock")
        .insert(id.clone(), Arc::new(session));
    Ok((StatusCode::CREATED, Json(json!({"session_id": id}))).into_response())
}

async fn session_info(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let session = state.session(&id)?;
    let w = session.working.lock().await;
    let key_views: Vec<serde_json::Value> = w
        .model
        .key_views()
        .iter()
        .map(|kv| {
            let doc = KeyViewDocument::from_record(kv, w.model.parts());
            json!({"euler": doc.euler, "matrix": kv.rotation.matrix().m})
        })
        .collect();
    Ok(Json(json!({
        "session_id": id,
        "dirty": w.dirty,
        "solved": w.model.is_solved(),
        "part_ids": w.model.parts().iter().map(|p| p.part_id.as_str()).collect::<Vec<_>>(),
        "key_views": key_views,
        "reference_view": w.model.reference_view(),
        "view": *session.view.read().expect("view lock"),
    })))
}

async fn add_key_view(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let session = state.session(&id)?;
    let mut w = session.working.lock().await;
    let rec = parse_key_view(&body, &w.model).map_err(ApiError::model)?;
    let model = w.model.add_key_view(rec).map_err(ApiError::model)?;
    w.model = model;
    session.invalidate(&mut w);
    let count = w.model.key_views().len();
    Ok(Json(json!({"key_view_index": count - 1, "key_view_count": count, "dirty": true})))
}

async fn delete_key_view(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let session = state.session(&id)?;
    let mut w = session.working.lock().await;
    let model = w.model.delete_latest_key_view().map_err(ApiError::model)?;
    w.model = model;
    session.invalidate(&mut w);
    Ok(Json(json!({"key_view_count": w.model.key_views().len(), "dirty": true})))
}

#[derive(Debug, Serialize)]
struct SolveResponse {
    residuals: Vec<f64>,
    distortion_norms: Vec<Vec<f64>>,
    parts: Vec<PartDiagnostics>,
}

async fn solve(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SolveResponse>> {
    let session = state.session(&id)?;
    let mut w = session.working.lock().await;
    let (solved, report) = solve_with_diagnostics(&w.model).map_err(ApiError::model)?;
    let evaluator = FrameEvaluator::new(solved.clone(), ShapeOptions::default())
        .map_err(|e| ApiError::bad_request("ShapeError", e.to_string()))?;
    w.model = solved;
    w.dirty = false;
    *session.snapshot.write().expect("snapshot lock") = Some(Arc::new(evaluator));
    Ok(Json(SolveResponse {
        residuals: report.iter().map(|d| d.residual).collect(),
        distortion_norms: report.iter().map(|d| d.distortion_norms.clone()).collect(),
        parts: report,
    }))
}

#[derive(Debug, Default, Deserialize)]
pub struct FrameQuery {
    yaw: Option<f64>,
    pitch: Option<f64>,
    roll: Option<f64>,
    quantize: Option<f64>,
    anchor_method: Option<String>,
    weight_method: Option<String>,
}

async fn frame(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<FrameQuery>, QueryRejection>,
) -> ApiResult<Json<FrameDocument>> {
    let Query(q) = query.map_err(|e| ApiError::bad_request("BadQuery", e.body_text()))?;
    let session = state.session(&id)?;
    let Some(evaluator) = session.snapshot() else {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "needs_solve",
            "key views changed since the last solve",
        ));
    };
    let defaults = *session.view.read().expect("view lock");
    let yaw = q.yaw.unwrap_or(defaults.yaw);
    let pitch = q.pitch.unwrap_or(defaults.pitch);
    let roll = q.roll.unwrap_or(defaults.roll);
    if ![yaw, pitch, roll].iter().all(|a| a.is_finite()) {
        return Err(ApiError::bad_request("BadAngles", "view angles must be finite"));
    }
    let params = BlendParams::default()
        .with_quantize_step(q.quantize.unwrap_or(defaults.quantize))
        .map_err(|e| ApiError::bad_request("BadQuantize", e.to_string()))?;
    let anchor = match &q.anchor_method {
        Some(s) => s
            .parse::<AnchorMethod>()
            .map_err(|e| ApiError::bad_request("UnknownMethod", e.to_string()))?,
        None => AnchorMethod::Vdd,
    };
    let weight = match &q.weight_method {
        Some(s) => s
            .parse::<WeightMethod>()
            .map_err(|e| ApiError::bad_request("UnknownMethod", e.to_string()))?,
        None => WeightMethod::FrobeniusVdd,
    };
    let cur = ViewRotation::from_euler(yaw, pitch, roll);
    let frame = evaluator
        .evaluate_with(&cur, &params, anchor, weight)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "DegenerateConfiguration", e.to_string()))?;
    Ok(Json(FrameDocument::from(&frame)))
}

async fn set_view(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let view: ViewSettings =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request("ParseError", e.to_string()))?;
    if ![view.yaw, view.pitch, view.roll].iter().all(|a| a.is_finite()) {
        return Err(ApiError::bad_request("BadAngles", "view angles must be finite"));
    }
    BlendParams::default()
        .with_quantize_step(view.quantize)
        .map_err(|e| ApiError::bad_request("BadQuantize", e.to_string()))?;
    let session = state.session(&id)?;
    *session.view.write().expect("view lock") = view;
    let snapped = quantize_view(&ViewRotation::from_euler(view.yaw, view.pitch, view.roll), view.quantize);
    let e: EulerAngles<f64> = snapped.to_euler();
    Ok(Json(json!({"view": view, "effective": e})))
}

async fn edit_part(
    State(state): State<Arc<AppState>>,
    Path((id, part_id, j)): Path<(String, String, usize)>,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let session = state.session(&id)?;
    let mut w = session.working.lock().await;
    let part = w
        .model
        .part_index(&part_id)
        .ok_or_else(|| ApiError::not_found(format!("unknown part '{part_id}'")))?;
    if j >= w.model.key_views().len() {
        return Err(ApiError::not_found(format!("no key view {j}")));
    }
    let doc = parse_part_view(&body).map_err(ApiError::model)?;
    let view = doc.to_part_view(&w.model.parts()[part]);
    let model = w
        .model
        .replace_part_view(j, part, view)
        .map_err(|e| ApiError::model(e.into()))?;
    w.model = model;
    session.invalidate(&mut w);
    Ok(Json(json!({"dirty": true})))
}

async fn export_model(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = state.session(&id)?;
    let bytes = save_model(&session.working.lock().await.model);
    Ok((
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))],
        bytes,
    )
        .into_response())
}
