// SPDX-License-Identifier: Apache-2.0

//! HTTP prediction endpoint wrapping one [`Pipeline`].
//!
//! | method | path         | body                                   |
//! |--------|--------------|----------------------------------------|
//! | GET    | `/interface` | interface description (JSON)           |
//! | POST   | `/predict`   | multipart/form-data, one part/element  |
//! | GET    | `/status`    | `{state, queue_depth, served_total}`   |
//!
//! Requests are admitted, parsed and validated concurrently; pipeline runs
//! are serialized behind a single FIFO lock.

mod announce;
mod api;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use tokio::net::TcpListener;
use voxserve_core::Pipeline;

pub use announce::{announce_loop, announce_once, AnnounceConfig, AnnounceOutcome};
pub use api::{router, EndpointShared};

pub const DEFAULT_MAX_REQUEST_BYTES: usize = 256 * 1024 * 1024;
pub const DEFAULT_REQUEST_TIMEOUT: Duration = Duration::from_secs(300);

#[derive(Debug, Clone)]
pub struct EndpointConfig {
    pub max_request_bytes: usize,
    pub request_timeout: Duration,
    pub announce: Option<AnnounceConfig>,
    /// Static files served under `/console`.
    pub console_dir: Option<PathBuf>,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            max_request_bytes: DEFAULT_MAX_REQUEST_BYTES,
            request_timeout: DEFAULT_REQUEST_TIMEOUT,
            announce: None,
            console_dir: None,
        }
    }
}

/// A running endpoint bound to a local address.
pub struct RunningEndpoint {
    pub addr: SocketAddr,
    pub shared: Arc<EndpointShared>,
    server: tokio::task::JoinHandle<std::io::Result<()>>,
    announcer: Option<tokio::task::JoinHandle<()>>,
}

impl RunningEndpoint {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Waits for the server task; only returns on I/O failure.
    pub async fn join(self) -> std::io::Result<()> {
        match self.server.await {
            Ok(r) => r,
            Err(e) => Err(std::io::Error::other(e)),
        }
    }

    pub fn shutdown(self) {
        self.server.abort();
        if let Some(a) = self.announcer {
            a.abort();
        }
    }
}

/// Serves `pipeline` on `listener`, starting the announce loop if configured.
pub fn spawn(listener: TcpListener, pipeline: Pipeline, config: EndpointConfig) -> std::io::Result<RunningEndpoint> {
    let addr = listener.local_addr()?;
    let announce = config.announce.clone();
    let (app, shared) = router(pipeline, &config);
    let server = tokio::spawn(async move { axum::serve(listener, app).await });
    let announcer = announce.map(|cfg| tokio::spawn(announce_loop(cfg)));
    Ok(RunningEndpoint { addr, shared, server, announcer })
}
