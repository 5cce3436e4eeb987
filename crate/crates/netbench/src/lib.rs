// SPDX-License-Identifier: Apache-2.0

//! Prediction latency under shaped networks.
//!
//! A [`ShapedProxy`] sits between the driver and an endpoint and imposes a
//! [`NetworkProfile`]'s bandwidth and round-trip time. [`measure`] replays a
//! request through it and splits the median latency into server compute,
//! an analytic transfer estimate and a residual.

mod measure;
mod profile;
mod proxy;
mod report;

pub use measure::{measure, resolve, synthesize_request, transfer_estimate, BenchError, Workload};
pub use profile::{default_profiles, encode_profiles, parse_profiles, NetworkProfile, ProfileError};
pub use proxy::{timed_upload, ProxyStats, ShapedProxy, TokenBucket, BUCKET_BYTES};
pub use report::{decode_reports, emit_report, encode_reports, latency_grid, median, LatencyReport, Rendered};
