// SPDX-License-Identifier: Apache-2.0

use std::net::SocketAddr;
use std::time::Instant;

use thiserror::Error;
use voxserve_client::{Client, ClientError};
use voxserve_core::protocol::{ElementKind, InterfaceDescription, PredictionRequest, RequestValue};
use voxserve_core::synth::NoisySphere;

use crate::report::median;
use crate::{LatencyReport, NetworkProfile, ShapedProxy};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("server url {0:?} has no usable host and port")]
    BadUrl(String),
    #[error("resolving {url}: {source}")]
    Resolve { url: String, source: std::io::Error },
    #[error("starting proxy: {0}")]
    Proxy(std::io::Error),
    #[error(transparent)]
    Client(#[from] ClientError),
}

/// A request replayed on every run, labelled by pipeline name.
#[derive(Debug, Clone)]
pub struct Workload {
    pub pipeline: String,
    pub request: PredictionRequest,
}

/// Fills every volume element of `desc` with a noisy sphere of edge `size`,
/// one seed per element. Other elements keep their defaults.
pub fn synthesize_request(desc: &InterfaceDescription, size: usize, seed: u64) -> PredictionRequest {
    let mut req = PredictionRequest::new();
    for (i, e) in desc.elements().iter().filter(|e| e.kind() == ElementKind::Volume).enumerate() {
        let volume = NoisySphere::new(size).with_seed(seed.wrapping_add(i as u64)).volume();
        req = req.with(&e.name, RequestValue::volume(volume));
    }
    req
}

pub async fn resolve(server_url: &str) -> Result<SocketAddr, BenchError> {
    let url = url::Url::parse(server_url).map_err(|_| BenchError::BadUrl(server_url.into()))?;
    let host = url.host_str().ok_or_else(|| BenchError::BadUrl(server_url.into()))?;
    let port = url.port_or_known_default().ok_or_else(|| BenchError::BadUrl(server_url.into()))?;
    let host = host.trim_start_matches('[').trim_end_matches(']');
    let mut addrs = tokio::net::lookup_host((host, port))
        .await
        .map_err(|source| BenchError::Resolve { url: server_url.into(), source })?;
    addrs.next().ok_or_else(|| BenchError::BadUrl(server_url.into()))
}

fn fresh_connection_client() -> Client {
    // no pooling: every run opens, and pays for, a new connection
    Client::from_reqwest(reqwest::Client::builder().pool_max_idle_per_host(0).build().unwrap_or_default())
}

struct Run {
    total_s: f64,
    compute_s: f64,
    up: u64,
    down: u64,
}

/// Runs `workload` `reps` times through a shaped proxy per profile, one
/// request at a time. A failed run stops that profile; its report is then
/// built from the runs that completed and flagged partial.
pub async fn measure(
    server_url: &str,
    workload: &Workload,
    profiles: &[NetworkProfile],
    reps: usize,
) -> Result<Vec<LatencyReport>, BenchError> {
    let upstream = resolve(server_url).await?;
    let client = fresh_connection_client();
    // warm the server once so the first measured run is not an outlier
    client.predict(server_url, &workload.request).await?;

    let mut reports = Vec::with_capacity(profiles.len());
    for profile in profiles {
        let proxy = ShapedProxy::start(profile.clone(), upstream).await.map_err(BenchError::Proxy)?;
        let mut runs = Vec::with_capacity(reps);
        let mut error = None;
        for _ in 0..reps {
            let (up0, down0) = (proxy.stats().up_bytes(), proxy.stats().down_bytes());
            let started = Instant::now();
            match client.predict(&proxy.url(), &workload.request).await {
                Ok(resp) => runs.push(Run {
                    total_s: started.elapsed().as_secs_f64(),
                    compute_s: resp.timing.inference_s,
                    up: proxy.stats().up_bytes() - up0,
                    down: proxy.stats().down_bytes() - down0,
                }),
                Err(e) => {
                    tracing::warn!(profile = %profile.name, error = %e, "run failed");
                    error = Some(e.to_string());
                    break;
                }
            }
        }
        reports.push(summarize(&workload.pipeline, profile, &runs, error));
    }
    Ok(reports)
}

fn summarize(pipeline: &str, profile: &NetworkProfile, runs: &[Run], error: Option<String>) -> LatencyReport {
    let med = |f: fn(&Run) -> f64| median(&mut runs.iter().map(f).collect::<Vec<_>>()).unwrap_or(0.0);
    let total_s = med(|r| r.total_s);
    let compute_s = if runs.is_empty() { None } else { Some(med(|r| r.compute_s)) };
    let request_bytes = med(|r| r.up as f64).round() as u64;
    let response_bytes = med(|r| r.down as f64).round() as u64;
    let transfer_estimate_s =
        if runs.is_empty() { 0.0 } else { transfer_estimate(profile, request_bytes, response_bytes) };
    LatencyReport {
        pipeline: pipeline.to_string(),
        profile: profile.name.clone(),
        runs: runs.len(),
        total_s,
        compute_s,
        transfer_estimate_s,
        residual_s: total_s - compute_s.unwrap_or(0.0) - transfer_estimate_s,
        request_bytes,
        response_bytes,
        partial: error.is_some(),
        error,
    }
}

pub fn transfer_estimate(profile: &NetworkProfile, request_bytes: u64, response_bytes: u64) -> f64 {
    (request_bytes * 8) as f64 / profile.up_bps as f64
        + (response_bytes * 8) as f64 / profile.down_bps as f64
        + 2.0 * profile.rtt_ms / 1000.0
}

#[cfg(test)]
mod tests {
    use voxserve_core::protocol::InterfaceElement;

    use super::*;

    #[test]
    fn transfer_estimate_by_hand() {
        let p = NetworkProfile::new("p", 8_000_000, 16_000_000, 25.0).unwrap();
        // 1 MB up at 1 MB/s, 1 MB down at 2 MB/s, two 25 ms round trips
        let t = transfer_estimate(&p, 1_000_000, 1_000_000);
        assert!((t - (1.0 + 0.5 + 0.05)).abs() < 1e-12, "{t}");
    }

    #[test]
    fn synthesized_request_fills_volumes_only() {
        let desc = InterfaceDescription::new(
            "x",
            vec![
                InterfaceElement::volume("a", "A", ""),
                InterfaceElement::slider("s", "S", 0.0, 1.0, 0.5).optional(),
                InterfaceElement::volume("b", "B", ""),
            ],
        )
        .unwrap();
        let req = synthesize_request(&desc, 4, 1);
        assert_eq!(req.values.keys().collect::<Vec<_>>(), ["a", "b"]);
        assert_ne!(req.get("a"), req.get("b"));
        assert!(voxserve_core::protocol::validate_request(&desc, &req).is_ok());
    }

    #[test]
    fn empty_run_list_is_partial_without_compute() {
        let p = NetworkProfile::new("p", 1, 1, 0.0).unwrap();
        let r = summarize("x", &p, &[], Some("boom".into()));
        assert!(r.partial && r.runs == 0 && r.compute_s.is_none());
    }
}
