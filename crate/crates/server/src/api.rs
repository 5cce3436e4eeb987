// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::multipart::MultipartError;
use axum::extract::{DefaultBodyLimit, Multipart, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::sync::Mutex;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;
use voxserve_core::pipeline::PipelineError;
use voxserve_core::protocol::{
    encode_interface, encode_response, validate_request, EndpointState, EndpointStatus, ErrorBody, ErrorCode,
    PredictionRequest, PredictionResponse, RequestValue, Violation,
};
use voxserve_core::Pipeline;

use crate::EndpointConfig;

/// State shared by all request handlers of one endpoint.
pub struct EndpointShared {
    pipeline: Pipeline,
    interface_json: String,
    max_request_bytes: usize,
    request_timeout: Duration,
    compute: Arc<Mutex<()>>,
    busy: Arc<AtomicBool>,
    queue_depth: AtomicU64,
    served_total: AtomicU64,
}

impl EndpointShared {
    pub fn status(&self) -> EndpointStatus {
        EndpointStatus {
            state: if self.busy.load(Ordering::SeqCst) { EndpointState::Busy } else { EndpointState::Idle },
            queue_depth: self.queue_depth.load(Ordering::SeqCst),
            served_total: self.served_total.load(Ordering::SeqCst),
        }
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }
}

struct ApiError(ErrorBody);

impl ApiError {
    fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError(ErrorBody::new(code, message))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.error.code.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.0)).into_response()
    }
}

fn json_body(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

pub fn router(pipeline: Pipeline, config: &EndpointConfig) -> (Router, Arc<EndpointShared>) {
    let shared = Arc::new(EndpointShared {
        interface_json: encode_interface(pipeline.interface()),
        pipeline,
        max_request_bytes: config.max_request_bytes,
        request_timeout: config.request_timeout,
        compute: Arc::new(Mutex::new(())),
        busy: Arc::new(AtomicBool::new(false)),
        queue_depth: AtomicU64::new(0),
        served_total: AtomicU64::new(0),
    });
    let mut app = Router::new()
        .route("/interface", get(get_interface))
        .route("/status", get(get_status))
        .route("/predict", post(post_predict))
        .layer(DefaultBodyLimit::max(config.max_request_bytes));
    if let Some(dir) = &config.console_dir {
        app = app.nest_service("/console", ServeDir::new(dir));
    }
    let app = app.layer(CorsLayer::permissive()).with_state(shared.clone());
    (app, shared)
}

async fn get_interface(State(shared): State<Arc<EndpointShared>>) -> Response {
    json_body(shared.interface_json.clone())
}

async fn get_status(State(shared): State<Arc<EndpointShared>>) -> Json<EndpointStatus> {
    Json(shared.status())
}

fn multipart_error(e: MultipartError) -> ApiError {
    if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
        ApiError::new(ErrorCode::PayloadTooLarge, e.body_text())
    } else {
        ApiError::new(ErrorCode::InvalidRequest, format!("malformed multipart body: {}", e.body_text()))
    }
}

/// Reads every part, binding it to its interface element. Returns the
/// request plus violations found while decoding parts.
async fn read_parts(
    shared: &EndpointShared,
    mut multipart: Multipart,
) -> Result<(PredictionRequest, Vec<Violation>), ApiError> {
    let interface = shared.pipeline.interface();
    let mut req = PredictionRequest::new();
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    while let Some(field) = multipart.next_field().await.map_err(multipart_error)? {
        let name = field.name().unwrap_or_default().to_string();
        let bytes: Bytes = field.bytes().await.map_err(multipart_error)?;
        if !seen.insert(name.clone()) {
            violations.push(Violation::new(&name, "duplicate part"));
            continue;
        }
        let Some(element) = interface.element(&name) else {
            violations.push(Violation::new(&name, "unknown element"));
            continue;
        };
        match RequestValue::from_part(element, &bytes) {
            Ok(value) => {
                req.values.insert(name, value);
            }
            Err(reason) => violations.push(Violation::new(&name, reason)),
        }
    }
    Ok((req, violations))
}

async fn predict(shared: Arc<EndpointShared>, multipart: Multipart) -> Result<Response, ApiError> {
    let (req, mut violations) = read_parts(&shared, multipart).await?;
    if let Err(v) = validate_request(shared.pipeline.interface(), &req) {
        for item in v {
            if !violations.iter().any(|existing| existing.element == item.element) {
                violations.push(item);
            }
        }
    }
    if !violations.is_empty() {
        return Err(ApiError(ErrorBody::invalid_request(violations)));
    }

    shared.queue_depth.fetch_add(1, Ordering::SeqCst);
    let guard = shared.compute.clone().lock_owned().await;
    shared.queue_depth.fetch_sub(1, Ordering::SeqCst);
    shared.busy.store(true, Ordering::SeqCst);

    // The guard moves into the blocking task so the lock is held for the
    // whole run even if this future is dropped on timeout.
    let busy = shared.busy.clone();
    let pipeline = shared.pipeline.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        let result = pipeline.run(&req);
        busy.store(false, Ordering::SeqCst);
        drop(guard);
        result
    })
    .await
    .map_err(|e| ApiError::new(ErrorCode::Internal, format!("pipeline task failed: {e}")))?;

    match outcome {
        Ok((fields, timing)) => {
            shared.served_total.fetch_add(1, Ordering::SeqCst);
            Ok(json_body(encode_response(&PredictionResponse { fields, timing })))
        }
        Err(PipelineError::Invalid(v)) => Err(ApiError(ErrorBody::invalid_request(v))),
        Err(e) => {
            tracing::warn!(error = %e, "pipeline run failed");
            Err(ApiError::new(ErrorCode::Internal, e.to_string()))
        }
    }
}

async fn post_predict(
    State(shared): State<Arc<EndpointShared>>,
    headers: HeaderMap,
    multipart: Result<Multipart, axum::extract::multipart::MultipartRejection>,
) -> Response {
    let declared =
        headers.get(header::CONTENT_LENGTH).and_then(|v| v.to_str().ok()).and_then(|v| v.parse::<u64>().ok());
    if declared.is_some_and(|n| n > shared.max_request_bytes as u64) {
        return ApiError::new(
            ErrorCode::PayloadTooLarge,
            format!("request body exceeds {} bytes", shared.max_request_bytes),
        )
        .into_response();
    }
    let multipart = match multipart {
        Ok(m) => m,
        Err(e) => {
            return ApiError::new(ErrorCode::InvalidRequest, format!("expected multipart/form-data: {}", e.body_text()))
                .into_response()
        }
    };
    let timeout = shared.request_timeout;
    match tokio::time::timeout(timeout, predict(shared, multipart)).await {
        Ok(Ok(resp)) => resp,
        Ok(Err(e)) => e.into_response(),
        Err(_) => ApiError::new(ErrorCode::Internal, format!("request timed out after {}s", timeout.as_secs_f64()))
            .into_response(),
    }
}
