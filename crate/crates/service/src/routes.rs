// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use axum::extract::{Query, Request, State};
use axum::http::header::{AUTHORIZATION, CONTENT_TYPE};
use axum::http::{HeaderMap, HeaderName, HeaderValue, Method, StatusCode, Uri};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use retention_core::{DataSources, Snapshot, SnapshotStore};
use serde::Serialize;
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::config::{ConfigError, ServiceConfig};
use crate::error::{ApiError, ServiceError};
use crate::report::{Report, REPORT_PATHS};

pub const API_PREFIX: &str = "/api/v1";

/// Headers attached to every response, describing the snapshot that
/// produced it.
pub const SNAPSHOT_HEADERS: [&str; 7] = [
    "x-snapshot-version",
    "x-ingest-rows-read",
    "x-ingest-rows-kept",
    "x-ingest-rows-deduplicated",
    "x-ingest-rows-rejected",
    "x-ingest-students",
    "x-ingest-cohorts",
];

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SnapshotStore>,
    pub sources: Arc<DataSources>,
    pub admin_token: Option<Arc<str>>,
}

impl AppState {
    pub fn new(store: Arc<SnapshotStore>, sources: DataSources, admin_token: Option<String>) -> Self {
        Self { store, sources: Arc::new(sources), admin_token: admin_token.map(Arc::from) }
    }

    /// Ingests the configured sources into a fresh store.
    pub fn open(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let store = SnapshotStore::open(&config.sources)?;
        Ok(Self::new(Arc::new(store), config.sources.clone(), config.admin_token.clone()))
    }
}

pub fn router(state: AppState, cors_origin: Option<&str>) -> Result<Router, ConfigError> {
    let mut api = Router::new()
        .route("/health", get(health))
        .route("/admin/reload", post(reload));
    for path in REPORT_PATHS {
        api = api.route(
            &format!("/{path}"),
            get(move |state: State<AppState>, query: Result<Query<Vec<(String, String)>>, _>| {
                report(state, path, query)
            }),
        );
    }
    let mut app = Router::new()
        .nest(API_PREFIX, api)
        .fallback(|uri: Uri| async move { ApiError::not_found(uri.path()) })
        .method_not_allowed_fallback(|method: Method, uri: Uri| async move {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", format!("{method} is not allowed on `{}`", uri.path()))
        })
        .layer(middleware::from_fn_with_state(state.clone(), stamp_current_snapshot))
        .with_state(state);
    if let Some(origin) = cors_origin {
        app = app.layer(cors(origin)?);
    }
    Ok(app)
}

fn cors(origin: &str) -> Result<CorsLayer, ConfigError> {
    let allow = if origin == "*" {
        AllowOrigin::any()
    } else {
        AllowOrigin::exact(HeaderValue::from_str(origin).map_err(|_| ConfigError::CorsOrigin(origin.to_owned()))?)
    };
    Ok(CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([AUTHORIZATION, CONTENT_TYPE])
        .expose_headers(SNAPSHOT_HEADERS.map(HeaderName::from_static)))
}

fn snapshot_headers(snapshot: &Snapshot) -> HeaderMap {
    let report = snapshot.report();
    let values = [
        snapshot.version(),
        report.rows_read,
        report.rows_kept,
        report.rows_deduplicated,
        report.rows_rejected,
        report.students_built,
        report.cohorts_built,
    ];
    SNAPSHOT_HEADERS
        .iter()
        .zip(values)
        .map(|(name, value)| (HeaderName::from_static(name), HeaderValue::from(value)))
        .collect()
}

/// Responses that did not come from a snapshot read (errors, the 404
/// fallback) are stamped with whatever snapshot is current.
async fn stamp_current_snapshot(State(state): State<AppState>, request: Request, next: Next) -> Response {
    let mut response = next.run(request).await;
    if !response.headers().contains_key(SNAPSHOT_HEADERS[0]) {
        response.headers_mut().extend(snapshot_headers(&state.store.current()));
    }
    response
}

fn respond(snapshot: &Snapshot, body: impl Serialize) -> Response {
    (snapshot_headers(snapshot), Json(body)).into_response()
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    version: u64,
}

async fn health(State(state): State<AppState>) -> Response {
    let snapshot = state.store.current();
    respond(&snapshot, Health { status: "ok", version: snapshot.version() })
}

async fn report(
    State(state): State<AppState>,
    path: &'static str,
    query: Result<Query<Vec<(String, String)>>, axum::extract::rejection::QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(params) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let report = Report::parse(path, &params)?;
    let snapshot = state.store.current();
    let output = report.run(&snapshot)?;
    Ok(respond(&snapshot, output))
}

#[derive(Serialize)]
struct Reloaded {
    version: u64,
    rows_read: u64,
    rows_kept: u64,
    rows_deduplicated: u64,
    rows_rejected: u64,
    students: u64,
    cohorts: u64,
}

fn bearer_matches(headers: &HeaderMap, expected: &str) -> bool {
    let Some(given) = headers.get(AUTHORIZATION).and_then(|v| v.to_str().ok()).and_then(|v| v.strip_prefix("Bearer ")) else {
        return false;
    };
    let (a, b) = (given.trim().as_bytes(), expected.as_bytes());
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

async fn reload(State(state): State<AppState>, headers: HeaderMap) -> Result<Response, ApiError> {
    let Some(token) = state.admin_token.as_deref() else {
        return Err(ApiError::unauthorized("reload is disabled: no admin token configured"));
    };
    if !bearer_matches(&headers, token) {
        return Err(ApiError::unauthorized("missing or invalid bearer token"));
    }
    let (store, sources) = (state.store.clone(), state.sources.clone());
    let snapshot = tokio::task::spawn_blocking(move || store.reload(&sources))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| ApiError::ingest_failed(&e))?;
    let report = snapshot.report();
    let body = Reloaded {
        version: snapshot.version(),
        rows_read: report.rows_read,
        rows_kept: report.rows_kept,
        rows_deduplicated: report.rows_deduplicated,
        rows_rejected: report.rows_rejected,
        students: report.students_built,
        cohorts: report.cohorts_built,
    };
    Ok(respond(&snapshot, body))
}
