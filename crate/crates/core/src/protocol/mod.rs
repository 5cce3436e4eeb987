// SPDX-License-Identifier: Apache-2.0

//! Wire-visible data shapes and their JSON codec.
//!
//! Every HTTP body in the system except the multipart prediction upload is
//! UTF-8 JSON. Struct field order is the encoded key order, so encodings
//! are byte-stable and usable in golden tests.

mod error;
mod interface;
mod registry;
mod request;
mod response;

use thiserror::Error;

pub use error::{ErrorBody, ErrorCode, ErrorDetail};
pub use interface::{
    decode_interface, encode_interface, Constraints, ElementKind, InterfaceDescription, InterfaceElement,
};
pub use registry::{AnnounceMessage, AnnounceReply, ServiceRecord};
pub use request::{validate_request, PredictionRequest, RequestValue, Violation};
pub use response::{
    decode_response, encode_response, FieldData, PhaseTiming, PredictionResponse, ResponseField, ResponseKind,
};

/// Status of a prediction endpoint as reported by `GET /status`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EndpointStatus {
    pub state: EndpointState,
    pub queue_depth: u64,
    pub served_total: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndpointState {
    Idle,
    Busy,
}

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    /// An enumeration member this build does not know, e.g. a newer element
    /// kind. Kept distinct so callers can treat it as a version signal.
    #[error("unsupported {what} kind {kind:?}")]
    UnsupportedKind { what: &'static str, kind: String },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("malformed message: {0}")]
    Malformed(String),
}

impl ProtocolError {
    pub fn code(&self) -> ErrorCode {
        match self {
            ProtocolError::UnsupportedKind { .. } => ErrorCode::UnsupportedKind,
            ProtocolError::Invariant(_) | ProtocolError::Malformed(_) => ErrorCode::InvalidRequest,
        }
    }
}

impl From<serde_json::Error> for ProtocolError {
    fn from(e: serde_json::Error) -> Self {
        ProtocolError::Malformed(e.to_string())
    }
}
