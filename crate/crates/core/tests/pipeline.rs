// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use voxserve_core::pipeline::{builtin_pipeline, Echo, Pipeline, PipelineError, FUSION_INPUTS};
use voxserve_core::protocol::{encode_response, FieldData, PredictionRequest, PredictionResponse, RequestValue};
use voxserve_core::synth::NoisySphere;
use voxserve_core::volume::{binarize, dice, otsu_threshold, Geometry};
use voxserve_core::{Volume, VolumeGrid};

fn segmentation(fields: &[voxserve_core::protocol::ResponseField]) -> Volume<u8> {
    match &fields[0].data {
        FieldData::LabelVolume(VolumeGrid::Uint8(v)) => v.clone(),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn echo_is_identity_on_labels() {
    let g = Geometry::new([5, 4, 3], [0.5, 0.5, 1.5], [1.0, 2.0, 3.0]).unwrap();
    let labels = Volume::from_fn(g, |[x, y, z]| ((x * y + z) % 4) as u8);
    let p = Pipeline::bare(Arc::new(Echo::default())).unwrap();
    let (fields, timing) =
        p.run(&PredictionRequest::new().with("image", RequestValue::volume(labels.clone()))).unwrap();
    assert_eq!(segmentation(&fields), labels);
    assert!(timing.preprocess_s >= 0.0 && timing.inference_s >= 0.0 && timing.postprocess_s >= 0.0);
}

#[test]
fn threshold_pipeline_recovers_sphere() {
    let sphere = NoisySphere::new(64);
    let g = Geometry::new([64; 3], [0.8, 0.8, 1.2], [-20.0, 5.0, 0.0]).unwrap();
    let image = Volume::from_parts(g, sphere.volume().into_voxels()).unwrap();
    let p = builtin_pipeline("threshold_segmenter").unwrap();
    let (fields, _) = p.run(&PredictionRequest::new().with("image", RequestValue::volume(image))).unwrap();
    let seg = segmentation(&fields);
    // post-processing hands results back in the client's frame
    assert_eq!(*seg.geometry(), g);
    let truth = sphere.mask();
    let d = dice(&Volume::from_vec([64; 3], seg.into_voxels()).unwrap(), &truth).unwrap();
    assert!(d >= 0.99, "dice {d}");
}

#[test]
fn otsu_on_gaussian_mixture() {
    // means 0.2 / 0.8, sigma 0.05, labels known by construction
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let low = Normal::new(0.2f32, 0.05).unwrap();
    let high = Normal::new(0.8f32, 0.05).unwrap();
    let n = 32 * 32 * 32;
    let truth: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
    let values: Vec<f32> =
        truth.iter().map(|&t| if t == 1 { high.sample(&mut rng) } else { low.sample(&mut rng) }).collect();
    let v = Volume::from_vec([32; 3], values).unwrap();
    let t = otsu_threshold(&v).unwrap();
    let mask = binarize(&v, t);
    let wrong = mask.voxels().iter().zip(&truth).filter(|(a, b)| a != b).count();
    assert!((wrong as f64) / (n as f64) < 0.01, "{wrong} misclassified at threshold {t}");
}

#[test]
fn reruns_are_byte_identical_and_request_untouched() {
    let image = NoisySphere::new(24).volume();
    let req = PredictionRequest::new().with("image", RequestValue::volume(image));
    let before = req.clone();
    let p = builtin_pipeline("threshold_segmenter").unwrap();
    let encode = |(fields, _)| encode_response(&PredictionResponse { fields, timing: Default::default() });
    let a = encode(p.run(&req).unwrap());
    let b = encode(p.run(&req).unwrap());
    assert_eq!(a, b);
    assert_eq!(req, before);
}

#[test]
fn phase_timing_within_wall_time() {
    let image = NoisySphere::new(48).volume();
    let req = PredictionRequest::new().with("image", RequestValue::volume(image));
    let p = builtin_pipeline("threshold_segmenter").unwrap();
    let started = Instant::now();
    let (_, timing) = p.run(&req).unwrap();
    let wall = started.elapsed().as_secs_f64();
    assert!(timing.total_s() <= wall + 0.05, "{timing:?} vs {wall}");
}

#[test]
fn fusion_missing_input_fails_validation() {
    let image = NoisySphere::new(8).volume();
    let mut req = PredictionRequest::new();
    for name in &FUSION_INPUTS[..3] {
        req = req.with(name, RequestValue::volume(image.clone()));
    }
    let p = builtin_pipeline("multi_modal_fusion").unwrap();
    match p.run(&req) {
        Err(PipelineError::Invalid(v)) => {
            assert_eq!(v.len(), 1);
            assert_eq!(v[0].element, "t2");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn bound_request_carries_everything_the_predictor_reads() {
    // A validated request binds inputs by name: identical values under the
    // declared names must give identical results whichever order they
    // were inserted in.
    let vols: Vec<_> = (0..4).map(|s| NoisySphere::new(12).with_seed(s).volume()).collect();
    let p = builtin_pipeline("multi_modal_fusion").unwrap();
    let mut fwd = PredictionRequest::new();
    let mut rev = PredictionRequest::new();
    for (n, v) in FUSION_INPUTS.iter().zip(&vols) {
        fwd = fwd.with(n, RequestValue::volume(v.clone()));
    }
    for (n, v) in FUSION_INPUTS.iter().zip(&vols).rev() {
        rev = rev.with(n, RequestValue::volume(v.clone()));
    }
    rev = rev.with("fusion", RequestValue::Text("mean".into()));
    assert_eq!(p.run(&fwd).unwrap().0, p.run(&rev).unwrap().0);
}
