// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::Violation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    InvalidRequest,
    UnsupportedKind,
    Unauthorized,
    NotFound,
    PayloadTooLarge,
    Internal,
}

impl ErrorCode {
    pub fn http_status(self) -> u16 {
        match self {
            ErrorCode::InvalidRequest | ErrorCode::UnsupportedKind => 400,
            ErrorCode::Unauthorized => 401,
            ErrorCode::NotFound => 404,
            ErrorCode::PayloadTooLarge => 413,
            ErrorCode::Internal => 500,
        }
    }
}

/// `{"error": {"code": ..., "message": ...}}`, with per-element violations
/// attached for validation failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

impl ErrorBody {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { error: ErrorDetail { code, message: message.into(), violations: Vec::new() } }
    }

    pub fn invalid_request(violations: Vec<Violation>) -> Self {
        let message = violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        Self { error: ErrorDetail { code: ErrorCode::InvalidRequest, message, violations } }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error body serializes")
    }
}

impl std::fmt::Display for ErrorBody {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let code = serde_json::to_value(self.error.code).ok();
        let code = code.as_ref().and_then(|c| c.as_str()).unwrap_or("?");
        write!(f, "{code}: {}", self.error.message)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_shape() {
        let body = ErrorBody::new(ErrorCode::PayloadTooLarge, "too big");
        assert_eq!(body.to_json(), r#"{"error":{"code":"payload_too_large","message":"too big"}}"#);
        assert_eq!(body.to_string(), "payload_too_large: too big");
        assert_eq!(ErrorCode::PayloadTooLarge.http_status(), 413);
    }

    #[test]
    fn violations_listed() {
        let body = ErrorBody::invalid_request(vec![Violation::new("t1", "missing required")]);
        let json = body.to_json();
        assert!(json.contains(r#""violations":[{"element":"t1","reason":"missing required"}]"#));
        let back: ErrorBody = serde_json::from_str(&json).unwrap();
        assert_eq!(back, body);
    }
}
