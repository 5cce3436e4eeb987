// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tower_http::cors::CorsLayer;
use voxserve_core::protocol::{AnnounceMessage, AnnounceReply, ErrorBody, ErrorCode, ServiceRecord};

use crate::{Registry, RegistryError};

pub fn router(registry: Arc<Registry>) -> Router {
    Router::new()
        .route("/announce", post(announce))
        .route("/discover", get(discover))
        .layer(CorsLayer::permissive())
        .with_state(registry)
}

/// Serves the registry on `listener` until the task is dropped.
pub async fn serve(listener: tokio::net::TcpListener, registry: Arc<Registry>) -> std::io::Result<()> {
    axum::serve(listener, router(registry)).await
}

fn error(code: ErrorCode, message: impl Into<String>) -> Response {
    let status = StatusCode::from_u16(code.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, Json(ErrorBody::new(code, message))).into_response()
}

async fn announce(State(registry): State<Arc<Registry>>, body: Bytes) -> Response {
    let msg = match std::str::from_utf8(&body).map_err(|e| e.to_string()).and_then(|s| {
        // shape only; content checks run after the key is authorized
        serde_json::from_str::<AnnounceMessage>(s).map_err(|e| e.to_string())
    }) {
        Ok(m) => m,
        Err(e) => return error(ErrorCode::InvalidRequest, format!("malformed announcement: {e}")),
    };
    let outcome = tokio::task::spawn_blocking(move || registry.announce(&msg)).await;
    match outcome {
        Ok(Ok(service_id)) => Json(AnnounceReply { service_id }).into_response(),
        Ok(Err(RegistryError::Unauthorized)) => error(ErrorCode::Unauthorized, "unknown api key"),
        Ok(Err(RegistryError::Invalid(e))) => error(ErrorCode::InvalidRequest, e.to_string()),
        Ok(Err(e @ RegistryError::Persist(_))) => {
            tracing::error!(error = %e, "snapshot failed");
            error(ErrorCode::Internal, e.to_string())
        }
        Err(e) => error(ErrorCode::Internal, e.to_string()),
    }
}

async fn discover(State(registry): State<Arc<Registry>>) -> Json<Vec<ServiceRecord>> {
    Json(registry.discover())
}
