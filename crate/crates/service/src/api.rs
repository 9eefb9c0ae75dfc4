//! HTTP routes over a [`SessionStore`].

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ermcda_core::decision::Strategy;
use ermcda_core::fusion::Rule;
use ermcda_core::pipeline::{PatchOp, PipelineError, RunOptions, SCENARIO_SCHEMA};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;

use crate::store::{SessionStore, StoreError};

pub type Shared = Arc<SessionStore>;

pub struct ApiError(StoreError);

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            StoreError::NotFound(_) | StoreError::NoReport(_) => StatusCode::NOT_FOUND,
            StoreError::Pipeline(PipelineError::RuleMode { .. }) => StatusCode::CONFLICT,
            StoreError::Invalid(_) | StoreError::BadPath(_) | StoreError::Pipeline(_) => StatusCode::UNPROCESSABLE_ENTITY,
            StoreError::NoDirectory | StoreError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = match &self.0 {
            StoreError::Invalid(issues) => json!({ "error": self.0.to_string(), "issues": issues }),
            e => json!({ "error": e.to_string() }),
        };
        (status, Json(body)).into_response()
    }
}

fn bad_body(e: serde_json::Error) -> ApiError {
    ApiError(StoreError::Invalid(vec![ermcda_core::pipeline::Issue { path: String::new(), message: e.to_string() }]))
}

/// Parses a JSON body; an empty body reads as `{}`.
fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return serde_json::from_str("{}").map_err(bad_body);
    }
    serde_json::from_slice(body).map_err(bad_body)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRequest {
    pub rule: Option<Rule>,
    pub strategy: Option<Strategy>,
    #[serde(default)]
    pub lean: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    #[serde(default)]
    pub patch: Vec<PatchOp>,
    pub rule: Option<Rule>,
    pub strategy: Option<Strategy>,
    #[serde(default)]
    pub lean: bool,
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, StoreError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.expect("store task panicked").map_err(ApiError)
}

async fn create(State(store): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let doc: Value = serde_json::from_slice(&body).map_err(bad_body)?;
    let id = blocking(move || store.create(doc)).await?;
    Ok((StatusCode::CREATED, [(header::LOCATION, format!("/api/scenarios/{id}"))], Json(json!({ "id": id }))).into_response())
}

async fn list(State(store): State<Shared>) -> Json<Value> {
    Json(json!({ "ids": store.ids() }))
}

async fn fetch(State(store): State<Shared>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    Ok(Json(store.get(&id)?))
}

async fn replace(State(store): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<StatusCode, ApiError> {
    let doc: Value = serde_json::from_slice(&body).map_err(bad_body)?;
    blocking(move || store.put(&id, doc)).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn run(State(store): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let req: RunRequest = parse(&body)?;
    let opts = RunOptions { rule: req.rule, strategy: req.strategy, lean: req.lean };
    let r = blocking(move || store.run(&id, &opts)).await?;
    Ok(Json(r).into_response())
}

async fn run_whatif(State(store): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let req: WhatIfRequest = parse(&body)?;
    let opts = RunOptions { rule: req.rule, strategy: req.strategy, lean: req.lean };
    let r = blocking(move || store.whatif(&id, &req.patch, &opts)).await?;
    Ok(Json(r).into_response())
}

async fn last_report(State(store): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(store.last_report(&id)?).into_response())
}

async fn save(State(store): State<Shared>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let path = blocking(move || store.save(&id)).await?;
    Ok(Json(json!({ "path": path.display().to_string() })))
}

async fn schema() -> Response {
    ([(header::CONTENT_TYPE, "application/schema+json")], SCENARIO_SCHEMA).into_response()
}

pub fn router(store: Shared) -> Router {
    Router::new()
        .route("/api/schema", get(schema))
        .route("/api/scenarios", post(create).get(list))
        .route("/api/scenarios/{id}", get(fetch).put(replace))
        .route("/api/scenarios/{id}/run", post(run))
        .route("/api/scenarios/{id}/whatif", post(run_whatif))
        .route("/api/scenarios/{id}/report", get(last_report))
        .route("/api/scenarios/{id}/save", post(save))
        .layer(CorsLayer::permissive())
        .with_state(store)
}

pub async fn serve(store: Shared, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
