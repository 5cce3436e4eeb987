// SPDX-License-Identifier: Apache-2.0

//! Client for registries and prediction endpoints.
//!
//! Requests are built from the endpoint's own interface description and
//! validated locally before anything is uploaded.

mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use reqwest::multipart::{Form, Part};
use thiserror::Error;
use voxserve_core::protocol::{
    decode_interface, decode_response, validate_request, ElementKind, ErrorBody, InterfaceDescription,
    PredictionRequest, PredictionResponse, ProtocolError, RequestValue, ServiceRecord, Violation,
};
use voxserve_core::volume::decode_mha;

pub use output::{output_file_name, save_outputs};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("cannot reach {url}: {reason}")]
    Connectivity { url: String, reason: String },
    #[error("protocol error: {0}")]
    Protocol(#[from] ProtocolError),
    #[error("invalid request: {}", list(.0))]
    Validation(Vec<Violation>),
    #[error("server replied {status}: {body}")]
    Server { status: u16, body: ServerBody },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn list(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Error payload of a non-success reply: the decoded error schema when the
/// server sent one, the raw text otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum ServerBody {
    Structured(ErrorBody),
    Raw(String),
}

impl std::fmt::Display for ServerBody {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ServerBody::Structured(b) => write!(f, "{b}"),
            ServerBody::Raw(s) => f.write_str(s),
        }
    }
}

impl ClientError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> u8 {
        match self {
            ClientError::Validation(_) => 2,
            ClientError::Connectivity { .. } => 3,
            ClientError::Protocol(_) | ClientError::Server { .. } => 4,
            ClientError::Io { .. } => 1,
        }
    }
}

/// A user-supplied input before it is bound to an interface element.
#[derive(Debug, Clone, PartialEq)]
pub enum UserValue {
    /// Path to an MHA file, for volume elements.
    File(PathBuf),
    /// Textual value for sliders, checkboxes, choices and text fields.
    Text(String),
}

/// Binds user values to the elements of `desc`, reading volumes from disk,
/// and validates the result. No network access.
pub fn build_request(
    desc: &InterfaceDescription,
    values: &BTreeMap<String, UserValue>,
) -> Result<PredictionRequest, ClientError> {
    let mut req = PredictionRequest::new();
    let mut violations = Vec::new();
    for (name, value) in values {
        let Some(element) = desc.element(name) else {
            violations.push(Violation::new(name, "unknown element"));
            continue;
        };
        let bound = match (element.kind(), value) {
            (ElementKind::Volume, UserValue::File(path)) => {
                let bytes = std::fs::read(path).map_err(|source| ClientError::Io { path: path.clone(), source })?;
                decode_mha(&bytes).map(RequestValue::volume).map_err(|e| format!("{}: {e}", path.display()))
            }
            (ElementKind::Volume, UserValue::Text(_)) => Err("expected a volume file".to_string()),
            (_, UserValue::Text(text)) => RequestValue::from_text(element, text),
            (kind, UserValue::File(_)) => Err(format!("{} elements take a value, not a file", kind.as_str())),
        };
        match bound {
            Ok(v) => {
                req.values.insert(name.clone(), v);
            }
            Err(reason) => violations.push(Violation::new(name, reason)),
        }
    }
    if !violations.is_empty() {
        return Err(ClientError::Validation(violations));
    }
    prepare(desc, req)
}

/// Accepts exactly the requests [`validate_request`] accepts.
pub fn prepare(desc: &InterfaceDescription, req: PredictionRequest) -> Result<PredictionRequest, ClientError> {
    validate_request(desc, &req).map_err(ClientError::Validation)?;
    Ok(req)
}

/// HTTP client handle. Cheap to clone; clones share a connection pool.
#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
}

impl Default for Client {
    fn default() -> Self {
        Self::new()
    }
}

impl Client {
    pub fn new() -> Self {
        Self::from_reqwest(reqwest::Client::new())
    }

    pub fn with_timeout(timeout: Duration) -> Self {
        Self::from_reqwest(reqwest::Client::builder().timeout(timeout).build().unwrap_or_default())
    }

    pub fn from_reqwest(http: reqwest::Client) -> Self {
        Self { http }
    }

    async fn send(&self, url: &str, req: reqwest::RequestBuilder) -> Result<String, ClientError> {
        let resp =
            req.send().await.map_err(|e| ClientError::Connectivity { url: url.to_string(), reason: e.to_string() })?;
        let status = resp.status();
        let text =
            resp.text().await.map_err(|e| ClientError::Connectivity { url: url.to_string(), reason: e.to_string() })?;
        if status.is_success() {
            return Ok(text);
        }
        let body = match serde_json::from_str::<ErrorBody>(&text) {
            Ok(b) => ServerBody::Structured(b),
            Err(_) => ServerBody::Raw(text),
        };
        Err(ClientError::Server { status: status.as_u16(), body })
    }

    /// Live services known to the registry, in registry order.
    pub async fn discover(&self, registry_url: &str) -> Result<Vec<ServiceRecord>, ClientError> {
        let url = join(registry_url, "discover");
        let text = self.send(&url, self.http.get(&url)).await?;
        Ok(serde_json::from_str(&text).map_err(ProtocolError::from)?)
    }

    pub async fn fetch_interface(&self, server_url: &str) -> Result<InterfaceDescription, ClientError> {
        let url = join(server_url, "interface");
        let text = self.send(&url, self.http.get(&url)).await?;
        Ok(decode_interface(&text)?)
    }

    /// Uploads a request that was already validated against the endpoint's
    /// interface.
    pub async fn predict(&self, server_url: &str, req: &PredictionRequest) -> Result<PredictionResponse, ClientError> {
        let mut form = Form::new();
        for (name, value) in &req.values {
            let part = Part::bytes(value.to_part());
            let part = match value {
                RequestValue::Volume(_) => part.file_name(format!("{name}.mha")).mime_str("application/octet-stream"),
                _ => part.mime_str("text/plain; charset=utf-8"),
            }
            .expect("static mime types parse");
            form = form.part(name.clone(), part);
        }
        let url = join(server_url, "predict");
        let text = self.send(&url, self.http.post(&url).multipart(form)).await?;
        Ok(decode_response(&text)?)
    }

    /// Fetches the interface, builds and validates the request from
    /// `values`, runs it and writes every response field into `out_dir`.
    pub async fn predict_to_dir(
        &self,
        server_url: &str,
        values: &BTreeMap<String, UserValue>,
        out_dir: &Path,
    ) -> Result<SavedPrediction, ClientError> {
        let desc = self.fetch_interface(server_url).await?;
        let req = build_request(&desc, values)?;
        let response = self.predict(server_url, &req).await?;
        let files = save_outputs(&response, out_dir)?;
        Ok(SavedPrediction { files, response })
    }
}

#[derive(Debug, Clone)]
pub struct SavedPrediction {
    pub files: Vec<PathBuf>,
    pub response: PredictionResponse,
}

fn join(base: &str, path: &str) -> String {
    format!("{}/{path}", base.trim_end_matches('/'))
}
