// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use tokio::net::TcpListener;
use voxserve_client::Client;
use voxserve_core::pipeline::{builtin_pipeline, builtin_pipeline_with, Predictor, SimulatedCompute};
use voxserve_netbench::{
    decode_reports, emit_report, measure, median, synthesize_request, timed_upload, LatencyReport, NetworkProfile,
    ShapedProxy, Workload,
};
use voxserve_server::{spawn, EndpointConfig, RunningEndpoint};

async fn endpoint(pipeline: voxserve_core::Pipeline) -> RunningEndpoint {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    spawn(listener, pipeline, EndpointConfig::default()).unwrap()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn eight_mebibytes_at_64_mbps() {
    let profile = NetworkProfile::new("calibration", 64_000_000, 64_000_000, 0.0).unwrap();
    let t = timed_upload(profile, 8 * 1024 * 1024).await.unwrap().as_secs_f64();
    assert!((1.0..=1.6).contains(&t), "{t}");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn round_trip_time_floor() {
    let ep = endpoint(builtin_pipeline("echo").unwrap()).await;
    let profile = NetworkProfile::new("far", 1_000_000_000, 1_000_000_000, 100.0).unwrap();
    let proxy = ShapedProxy::start(profile, ep.addr).await.unwrap();
    let http = reqwest::Client::builder().pool_max_idle_per_host(0).build().unwrap();
    let started = Instant::now();
    let body = http.get(format!("{}/status", proxy.url())).send().await.unwrap().text().await.unwrap();
    assert!(body.contains("served_total"));
    assert!(started.elapsed() >= Duration::from_millis(200), "{:?}", started.elapsed());
    assert_eq!(proxy.stats().connections(), 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn unlimited_profile_is_close_to_direct() {
    let ep = endpoint(builtin_pipeline("threshold_segmenter").unwrap()).await;
    let desc = Client::new().fetch_interface(&ep.url()).await.unwrap();
    let req = synthesize_request(&desc, 64, 3);
    let proxy = ShapedProxy::start(NetworkProfile::unlimited(), ep.addr).await.unwrap();
    let client = Client::new();
    client.predict(&ep.url(), &req).await.unwrap();
    let mut direct = Vec::new();
    let mut shaped = Vec::new();
    for _ in 0..5 {
        for (url, out) in [(ep.url(), &mut direct), (proxy.url(), &mut shaped)] {
            let t = Instant::now();
            client.predict(&url, &req).await.unwrap();
            out.push(t.elapsed().as_secs_f64());
        }
    }
    let (d, s) = (median(&mut direct).unwrap(), median(&mut shaped).unwrap());
    assert!(s <= d * 1.1, "direct {d}s, shaped {s}s");
}

#[tokio::test]
async fn refused_upstream_closes_the_client_connection() {
    let dead = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = dead.local_addr().unwrap();
    drop(dead);
    let proxy = ShapedProxy::start(NetworkProfile::unlimited(), addr).await.unwrap();
    let err = Client::new().fetch_interface(&proxy.url()).await.unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn measured_reports_decompose() {
    let pipeline = builtin_pipeline_with("threshold_segmenter", |p| {
        Arc::new(SimulatedCompute::new(p, Duration::from_millis(50), Duration::ZERO)) as Arc<dyn Predictor>
    })
    .unwrap();
    let ep = endpoint(pipeline).await;
    let desc = Client::new().fetch_interface(&ep.url()).await.unwrap();
    let workload = Workload { pipeline: "threshold_segmenter".into(), request: synthesize_request(&desc, 16, 1) };
    let profiles = vec![
        NetworkProfile::new("fast", 1_000_000_000, 1_000_000_000, 1.0).unwrap(),
        NetworkProfile::new("slow", 2_000_000, 8_000_000, 30.0).unwrap(),
    ];
    let reports = measure(&ep.url(), &workload, &profiles, 3).await.unwrap();
    assert_eq!(reports.len(), 2);
    for r in &reports {
        assert_eq!(r.runs, 3);
        assert!(!r.partial);
        let compute = r.compute_s.unwrap();
        assert!(compute >= 0.05 && r.total_s >= compute, "{r:?}");
        assert!(r.residual_s >= -0.1, "{r:?}");
        assert!(r.request_bytes > 16 * 16 * 16 * 4, "{r:?}");
    }
    assert_eq!(reports[0].request_bytes, reports[1].request_bytes);
    assert!(reports[0].total_s < reports[1].total_s);
}

#[tokio::test]
async fn failed_warm_up_aborts_measurement() {
    let ep = endpoint(builtin_pipeline("echo").unwrap()).await;
    let mut bogus = voxserve_core::protocol::PredictionRequest::new();
    bogus = bogus.with("image", voxserve_core::protocol::RequestValue::Number(1.0));
    let workload = Workload { pipeline: "echo".into(), request: bogus };
    // the warm-up run fails first and aborts the whole measurement
    assert!(measure(&ep.url(), &workload, &[NetworkProfile::unlimited()], 2).await.is_err());
}

fn report() -> impl Strategy<Value = LatencyReport> {
    (
        "[a-z_]{1,12}",
        "[A-Za-z0-9]{1,6}",
        0usize..10,
        (0.0f64..100.0, proptest::option::of(0.0f64..10.0), 0.0f64..10.0),
        (any::<u32>(), any::<u32>(), proptest::option::of(".{0,10}")),
    )
        .prop_map(|(pipeline, profile, runs, (total_s, compute_s, transfer), (up, down, error))| LatencyReport {
            pipeline,
            profile,
            runs,
            total_s,
            compute_s,
            transfer_estimate_s: transfer,
            residual_s: total_s - compute_s.unwrap_or(0.0) - transfer,
            request_bytes: u64::from(up),
            response_bytes: u64::from(down),
            partial: error.is_some(),
            error,
        })
}

proptest! {
    #[test]
    fn machine_readable_report_roundtrips(reports in proptest::collection::vec(report(), 0..12)) {
        let rendered = emit_report(&reports);
        prop_assert_eq!(rendered.text.lines().count(), reports.len() + 1);
        prop_assert_eq!(decode_reports(&rendered.json).unwrap(), reports);
    }
}
