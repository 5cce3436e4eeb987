// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::routing::{get, post};
use proptest::prelude::*;
use tokio::net::TcpListener;
use voxserve_client::{build_request, prepare, Client, ClientError, ServerBody, UserValue};
use voxserve_core::pipeline::builtin_pipeline;
use voxserve_core::protocol::{
    encode_interface, validate_request, AnnounceMessage, ErrorCode, FieldData, PredictionRequest, RequestValue,
};
use voxserve_core::synth::NoisySphere;
use voxserve_core::testing::strategies;
use voxserve_core::volume::encode_mha;
use voxserve_core::VolumeGrid;
use voxserve_registry::{KeyTable, ManualClock, Registry};
use voxserve_server::{spawn, EndpointConfig, RunningEndpoint};

async fn endpoint(name: &str) -> RunningEndpoint {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    spawn(listener, builtin_pipeline(name).unwrap(), EndpointConfig::default()).unwrap()
}

/// Serves a fixed interface and counts prediction requests.
async fn counting_stub(interface: String) -> (String, Arc<AtomicUsize>) {
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    let app = axum::Router::new().route("/interface", get(move || async move { interface })).route(
        "/predict",
        post(move || async move {
            counter.fetch_add(1, Ordering::SeqCst);
            "{}"
        }),
    );
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(async move { axum::serve(listener, app).await });
    (url, hits)
}

fn write_volume(dir: &std::path::Path, name: &str, v: &VolumeGrid) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, encode_mha(v)).unwrap();
    path
}

#[tokio::test(flavor = "multi_thread")]
async fn remote_result_matches_local_pipeline_bytes() {
    let ep = endpoint("threshold_segmenter").await;
    let dir = tempfile::tempdir().unwrap();
    let image = VolumeGrid::from(NoisySphere::new(32).volume());
    let input = write_volume(dir.path(), "in.mha", &image);
    let out = dir.path().join("out");

    let values = BTreeMap::from([("image".to_string(), UserValue::File(input))]);
    let saved = Client::new().predict_to_dir(&ep.url(), &values, &out).await.unwrap();

    let local = builtin_pipeline("threshold_segmenter").unwrap();
    let (fields, _) = local.run(&PredictionRequest::new().with("image", RequestValue::volume(image))).unwrap();
    let FieldData::LabelVolume(expected) = &fields[0].data else { panic!() };
    assert_eq!(std::fs::read(out.join("segmentation.mha")).unwrap(), encode_mha(expected));

    // one file per field, named by the field
    let mut names: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names, ["method.txt", "segmentation.mha", "threshold.json"]);
    assert_eq!(saved.files.len(), 3);
    assert_eq!(std::fs::read_to_string(out.join("method.txt")).unwrap(), "otsu");
    let measure: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("threshold.json")).unwrap()).unwrap();
    assert_eq!(measure["unit"], "normalized");
}

#[tokio::test]
async fn local_validation_failure_sends_nothing() {
    let desc = builtin_pipeline("multi_modal_fusion").unwrap().interface().clone();
    let (url, hits) = counting_stub(encode_interface(&desc)).await;
    let dir = tempfile::tempdir().unwrap();
    let v = VolumeGrid::from(NoisySphere::new(4).volume());
    let mut values = BTreeMap::new();
    for name in ["flair", "t1", "t1c"] {
        values.insert(name.to_string(), UserValue::File(write_volume(dir.path(), name, &v)));
    }
    values.insert("fusion".into(), UserValue::Text("median".into()));
    let err = Client::new().predict_to_dir(&url, &values, dir.path()).await.unwrap_err();
    let ClientError::Validation(v) = &err else { panic!("{err}") };
    let mut names: Vec<_> = v.iter().map(|v| v.element.as_str()).collect();
    names.sort();
    assert_eq!(names, ["fusion", "t2"]);
    assert_eq!(err.exit_code(), 2);
    assert_eq!(hits.load(Ordering::SeqCst), 0);
}

#[tokio::test]
async fn server_errors_are_surfaced_verbatim() {
    let ep = endpoint("threshold_segmenter").await;
    // bypasses local validation on purpose
    let req = PredictionRequest::new()
        .with("image", RequestValue::volume(NoisySphere::new(4).volume()))
        .with("threshold_override", RequestValue::Number(99.0));
    let err = Client::new().predict(&ep.url(), &req).await.unwrap_err();
    let ClientError::Server { status: 400, body: ServerBody::Structured(body) } = &err else { panic!("{err}") };
    assert_eq!(body.error.code, ErrorCode::InvalidRequest);
    assert_eq!(body.error.violations[0].element, "threshold_override");
    assert_eq!(err.exit_code(), 4);
}

#[tokio::test]
async fn unsupported_interface_kind_is_named() {
    let text =
        r#"{"name":"x","elements":[{"name":"a","kind":"hologram","label":"A","required":true,"constraints":{}}]}"#;
    let (url, _) = counting_stub(text.to_string()).await;
    let err = Client::new().fetch_interface(&url).await.unwrap_err();
    assert!(matches!(err, ClientError::Protocol(_)), "{err}");
    assert!(err.to_string().contains("hologram"), "{err}");
}

#[tokio::test]
async fn discover_and_select_by_id() {
    let keys = KeyTable::from_pairs([("key", "lab")]);
    let registry = Arc::new(Registry::new(keys, 1800, ManualClock::new(10)));
    let mut ids = Vec::new();
    for url in ["http://a:1", "http://b:2"] {
        let msg = AnnounceMessage {
            api_key: "key".into(),
            prediction_url: url.into(),
            name: url.into(),
            description: String::new(),
            modality: String::new(),
            anatomy: String::new(),
            task: String::new(),
        };
        ids.push(registry.announce(&msg).unwrap());
    }
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(async move { axum::serve(listener, voxserve_registry::router(registry)).await });

    let found = Client::new().discover(&url).await.unwrap();
    assert_eq!(found.len(), 2);
    let pick = found.iter().find(|r| r.service_id == ids[1]).unwrap();
    assert_eq!(pick.prediction_url, "http://b:2");

    let err = Client::new().discover("http://127.0.0.1:1").await.unwrap_err();
    assert!(matches!(err, ClientError::Connectivity { .. }));
    assert_eq!(err.exit_code(), 3);
}

#[tokio::test(flavor = "multi_thread")]
async fn cli_exit_codes() {
    let ep = endpoint("echo").await;
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_voxserve");
    let input = write_volume(dir.path(), "in.mha", &VolumeGrid::from(NoisySphere::new(6).volume()));
    let url = ep.url();
    let out_dir = dir.path().join("o");
    let input_arg = format!("image={}", input.display());

    let run = move |args: Vec<String>| {
        let out = Command::new(bin).args(&args).output().unwrap();
        (out.status.code(), String::from_utf8_lossy(&out.stdout).into_owned())
    };
    let ok = tokio::task::spawn_blocking({
        let (url, o, v) = (url.clone(), out_dir.display().to_string(), input_arg.clone());
        move || run(vec!["predict".into(), url, "--volume".into(), v, "--out".into(), o])
    })
    .await
    .unwrap();
    assert_eq!(ok.0, Some(0), "{}", ok.1);
    assert!(ok.1.contains("labels") && ok.1.contains("timing:"), "{}", ok.1);
    assert!(out_dir.join("labels.mha").exists());

    let code = |args: Vec<String>| async move { tokio::task::spawn_blocking(move || run(args).0).await.unwrap() };
    assert_eq!(code(vec!["predict".into(), url.clone(), "--set".into(), "image=3".into()]).await, Some(2));
    assert_eq!(code(vec!["discover".into(), "--registry".into(), "http://127.0.0.1:1".into()]).await, Some(3));
    assert_eq!(code(vec!["describe".into(), url.clone()]).await, Some(0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn local_validation_agrees_with_protocol(
        (d, req) in strategies::interface().prop_flat_map(|d| {
            let names = d.elements().iter().map(|e| e.name.clone()).collect();
            (Just(d), strategies::value_map(names))
        })
    ) {
        prop_assert_eq!(prepare(&d, req.clone()).is_ok(), validate_request(&d, &req).is_ok());
    }

    #[test]
    fn text_values_bind_like_the_server(
        d in strategies::interface(),
        texts in proptest::collection::vec(".{0,6}|-?[0-9]{1,3}(\\.[0-9]{1,2})?|true|false", 0..6),
    ) {
        // For non-volume elements, the client's binding of text must match
        // what the server derives from the same bytes in a multipart part.
        let values: BTreeMap<String, UserValue> = d
            .elements()
            .iter()
            .filter(|e| e.kind() != voxserve_core::protocol::ElementKind::Volume)
            .zip(&texts)
            .map(|(e, t)| (e.name.clone(), UserValue::Text(t.clone())))
            .collect();
        let client_side = build_request(&d, &values);
        let mut server_req = PredictionRequest::new();
        let mut server_ok = true;
        for (name, v) in &values {
            let UserValue::Text(t) = v else { unreachable!() };
            match RequestValue::from_part(d.element(name).unwrap(), t.as_bytes()) {
                Ok(x) => { server_req.values.insert(name.clone(), x); }
                Err(_) => server_ok = false,
            }
        }
        let server_ok = server_ok && validate_request(&d, &server_req).is_ok();
        prop_assert_eq!(client_side.is_ok(), server_ok);
        if let Ok(r) = client_side {
            prop_assert_eq!(r, server_req);
        }
    }
}
