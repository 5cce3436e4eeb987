// SPDX-License-Identifier: Apache-2.0

use std::time::Duration;

use reqwest::StatusCode;
use voxserve_core::protocol::{AnnounceMessage, AnnounceReply};

pub const DEFAULT_ANNOUNCE_PERIOD: Duration = Duration::from_secs(600);

#[derive(Debug, Clone)]
pub struct AnnounceConfig {
    /// Base URL of the registry, e.g. `http://registry:8700`.
    pub registry_url: String,
    pub period: Duration,
    /// Message sent on every beat; `prediction_url` must be reachable by clients.
    pub message: AnnounceMessage,
}

impl AnnounceConfig {
    pub fn new(registry_url: impl Into<String>, message: AnnounceMessage) -> Self {
        Self { registry_url: registry_url.into(), period: DEFAULT_ANNOUNCE_PERIOD, message }
    }

    fn endpoint(&self) -> String {
        format!("{}/announce", self.registry_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnounceOutcome {
    Registered { service_id: String },
    Unauthorized,
    Rejected { status: u16, body: String },
    Unreachable(String),
}

/// Sends one announcement.
pub async fn announce_once(client: &reqwest::Client, cfg: &AnnounceConfig) -> AnnounceOutcome {
    let resp = match client
        .post(cfg.endpoint())
        .header(reqwest::header::CONTENT_TYPE, "application/json")
        .body(cfg.message.encode())
        .send()
        .await
    {
        Ok(r) => r,
        Err(e) => return AnnounceOutcome::Unreachable(e.to_string()),
    };
    let status = resp.status();
    if status == StatusCode::UNAUTHORIZED {
        return AnnounceOutcome::Unauthorized;
    }
    let body = resp.text().await.unwrap_or_default();
    if !status.is_success() {
        return AnnounceOutcome::Rejected { status: status.as_u16(), body };
    }
    match serde_json::from_str::<AnnounceReply>(&body) {
        Ok(reply) => AnnounceOutcome::Registered { service_id: reply.service_id },
        Err(e) => AnnounceOutcome::Rejected { status: status.as_u16(), body: format!("bad reply: {e}") },
    }
}

/// Announces immediately and then every `period`, forever. Failures are
/// logged and retried on the next beat.
pub async fn announce_loop(cfg: AnnounceConfig) {
    let client = reqwest::Client::builder().timeout(Duration::from_secs(30)).build().unwrap_or_default();
    let mut ticker = tokio::time::interval(cfg.period);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        ticker.tick().await;
        match announce_once(&client, &cfg).await {
            AnnounceOutcome::Registered { service_id } => {
                tracing::info!(%service_id, registry = %cfg.registry_url, "announced")
            }
            AnnounceOutcome::Unauthorized => {
                tracing::error!(registry = %cfg.registry_url, "announce rejected: unknown api key")
            }
            AnnounceOutcome::Rejected { status, body } => {
                tracing::warn!(status, %body, registry = %cfg.registry_url, "announce rejected")
            }
            AnnounceOutcome::Unreachable(e) => {
                tracing::warn!(error = %e, registry = %cfg.registry_url, "registry unreachable")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_joins_without_double_slash() {
        let msg = AnnounceMessage {
            api_key: "k".into(),
            prediction_url: "http://a".into(),
            name: "n".into(),
            description: String::new(),
            modality: String::new(),
            anatomy: String::new(),
            task: String::new(),
        };
        assert_eq!(AnnounceConfig::new("http://r:1/", msg.clone()).endpoint(), "http://r:1/announce");
        assert_eq!(AnnounceConfig::new("http://r:1", msg).endpoint(), "http://r:1/announce");
    }
}
