// SPDX-License-Identifier: Apache-2.0

//! Announcement and discovery messages.

use serde::{Deserialize, Serialize};
use url::Url;

use super::ProtocolError;

/// Authenticated registration of a prediction endpoint.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnounceMessage {
    pub api_key: String,
    pub prediction_url: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub modality: String,
    #[serde(default)]
    pub anatomy: String,
    #[serde(default)]
    pub task: String,
}

// Keep the key out of logs.
impl std::fmt::Debug for AnnounceMessage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnnounceMessage")
            .field("api_key", &"<redacted>")
            .field("prediction_url", &self.prediction_url)
            .field("name", &self.name)
            .field("description", &self.description)
            .field("modality", &self.modality)
            .field("anatomy", &self.anatomy)
            .field("task", &self.task)
            .finish()
    }
}

impl AnnounceMessage {
    pub fn check(&self) -> Result<(), ProtocolError> {
        if self.name.is_empty() {
            return Err(ProtocolError::Invariant("name must be nonempty".into()));
        }
        let url = Url::parse(&self.prediction_url)
            .map_err(|e| ProtocolError::Invariant(format!("prediction_url {:?}: {e}", self.prediction_url)))?;
        if !matches!(url.scheme(), "http" | "https") || url.host().is_none() {
            return Err(ProtocolError::Invariant(format!(
                "prediction_url {:?} is not an absolute HTTP URL",
                self.prediction_url
            )));
        }
        Ok(())
    }

    pub fn decode(text: &str) -> Result<Self, ProtocolError> {
        let msg: Self = serde_json::from_str(text)?;
        msg.check()?;
        Ok(msg)
    }

    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("announce serializes")
    }
}

/// A registered endpoint as returned by discovery. Never carries the key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceRecord {
    pub service_id: String,
    pub prediction_url: String,
    pub name: String,
    pub description: String,
    pub modality: String,
    pub anatomy: String,
    pub task: String,
    /// Unix seconds of the latest accepted announcement.
    pub last_seen: u64,
    pub ttl_s: u64,
}

impl ServiceRecord {
    pub fn from_announce(service_id: String, msg: &AnnounceMessage, now: u64, ttl_s: u64) -> Self {
        Self {
            service_id,
            prediction_url: msg.prediction_url.clone(),
            name: msg.name.clone(),
            description: msg.description.clone(),
            modality: msg.modality.clone(),
            anatomy: msg.anatomy.clone(),
            task: msg.task.clone(),
            last_seen: now,
            ttl_s,
        }
    }

    /// Live iff `now - last_seen <= ttl_s`.
    pub fn is_live(&self, now: u64) -> bool {
        now.saturating_sub(self.last_seen) <= self.ttl_s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnounceReply {
    pub service_id: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(url: &str) -> AnnounceMessage {
        AnnounceMessage {
            api_key: "s3cret".into(),
            prediction_url: url.into(),
            name: "prostate".into(),
            description: "d".into(),
            modality: "MR".into(),
            anatomy: "prostate".into(),
            task: "segmentation".into(),
        }
    }

    #[test]
    fn url_must_be_absolute_http() {
        assert!(msg("http://10.0.0.1:9000").check().is_ok());
        assert!(msg("https://example.org/model").check().is_ok());
        assert!(msg("/relative").check().is_err());
        assert!(msg("ftp://example.org").check().is_err());
        assert!(msg("mailto:someone@example.org").check().is_err());
        let mut m = msg("http://a");
        m.name.clear();
        assert!(m.check().is_err());
    }

    #[test]
    fn debug_redacts_key() {
        assert!(!format!("{:?}", msg("http://a")).contains("s3cret"));
    }

    #[test]
    fn liveness_boundary() {
        let r = ServiceRecord::from_announce("id".into(), &msg("http://a"), 100, 1800);
        assert!(r.is_live(100));
        assert!(r.is_live(1900));
        assert!(!r.is_live(1901));
    }
}
