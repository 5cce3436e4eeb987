// SPDX-License-Identifier: Apache-2.0

//! Deterministic stand-in predictors.
//!
//! * `echo` returns its single input as a label volume.
//! * `threshold_segmenter` binarizes one volume at an explicit threshold or
//!   at the Otsu threshold.
//! * `multi_modal_fusion` fuses four co-registered volumes voxel-wise, then
//!   thresholds the result with Otsu.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{Inputs, OutputSpec, OutputValue, Pipeline, PostStep, PreStep, Predictor, PredictorError};
use crate::protocol::{InterfaceDescription, InterfaceElement, RequestValue, ResponseKind};
use crate::volume::{self, Volume, VolumeGrid};

pub const BUILTIN_NAMES: [&str; 3] = ["echo", "threshold_segmenter", "multi_modal_fusion"];

fn volume_input<'a>(inputs: &'a Inputs, name: &str) -> Result<&'a VolumeGrid, PredictorError> {
    match inputs.get(name) {
        Some(RequestValue::Volume(v)) => Ok(v),
        _ => Err(PredictorError(format!("volume input {name:?} not bound"))),
    }
}

fn number_input(inputs: &Inputs, name: &str) -> Result<f64, PredictorError> {
    match inputs.get(name) {
        Some(RequestValue::Number(x)) => Ok(*x),
        _ => Err(PredictorError(format!("numeric input {name:?} not bound"))),
    }
}

fn text_input<'a>(inputs: &'a Inputs, name: &str) -> Result<&'a str, PredictorError> {
    match inputs.get(name) {
        Some(RequestValue::Text(s)) => Ok(s),
        _ => Err(PredictorError(format!("text input {name:?} not bound"))),
    }
}

/// Returns the input as a label volume: label volumes pass through,
/// intensity volumes become their positive-voxel mask.
pub struct Echo {
    desc: InterfaceDescription,
    outputs: Vec<OutputSpec>,
}

impl Default for Echo {
    fn default() -> Self {
        Self {
            desc: InterfaceDescription::new("echo", vec![InterfaceElement::volume("image", "Input volume", "")])
                .expect("valid interface"),
            outputs: vec![OutputSpec::new("labels", ResponseKind::LabelVolume)],
        }
    }
}

impl Predictor for Echo {
    fn interface(&self) -> &InterfaceDescription {
        &self.desc
    }

    fn outputs(&self) -> &[OutputSpec] {
        &self.outputs
    }

    fn predict(&self, inputs: &Inputs) -> Result<BTreeMap<String, OutputValue>, PredictorError> {
        let labels = match volume_input(inputs, "image")? {
            VolumeGrid::Uint8(v) => v.clone(),
            VolumeGrid::Float32(v) => v.map(|&x| u8::from(x > 0.0)),
        };
        Ok([("labels".to_string(), OutputValue::Volume(labels.into()))].into())
    }
}

/// Value of `threshold_override` that selects the automatic threshold.
pub const AUTOMATIC_THRESHOLD: f64 = -1.0;

pub struct ThresholdSegmenter {
    desc: InterfaceDescription,
    outputs: Vec<OutputSpec>,
}

impl Default for ThresholdSegmenter {
    fn default() -> Self {
        Self {
            desc: InterfaceDescription::new(
                "threshold_segmenter",
                vec![
                    InterfaceElement::volume("image", "Input volume", ""),
                    InterfaceElement::slider(
                        "threshold_override",
                        "Threshold on normalized intensity (-1 = automatic)",
                        AUTOMATIC_THRESHOLD,
                        10.0,
                        AUTOMATIC_THRESHOLD,
                    )
                    .optional(),
                ],
            )
            .expect("valid interface"),
            outputs: vec![
                OutputSpec::new("segmentation", ResponseKind::LabelVolume),
                OutputSpec::new("threshold", ResponseKind::ScalarMeasure),
                OutputSpec::new("method", ResponseKind::PlainText),
            ],
        }
    }
}

/// Binarizes at `override_value`, or at the Otsu threshold when it equals
/// [`AUTOMATIC_THRESHOLD`]. Returns the mask, threshold and method name.
fn threshold(image: &Volume<f32>, override_value: f64) -> Result<(Volume<u8>, f32, &'static str), PredictorError> {
    let (t, method) = if override_value == AUTOMATIC_THRESHOLD {
        (volume::otsu_threshold(image)?, "otsu")
    } else {
        (override_value as f32, "override")
    };
    Ok((volume::binarize(image, t), t, method))
}

impl Predictor for ThresholdSegmenter {
    fn interface(&self) -> &InterfaceDescription {
        &self.desc
    }

    fn outputs(&self) -> &[OutputSpec] {
        &self.outputs
    }

    fn predict(&self, inputs: &Inputs) -> Result<BTreeMap<String, OutputValue>, PredictorError> {
        let image = volume_input(inputs, "image")?.to_float();
        let (mask, t, method) = threshold(&image, number_input(inputs, "threshold_override")?)?;
        Ok([
            ("segmentation".to_string(), OutputValue::Volume(mask.into())),
            ("threshold".to_string(), OutputValue::Measure { value: f64::from(t), unit: "normalized".into() }),
            ("method".to_string(), OutputValue::Text(method.to_string())),
        ]
        .into())
    }
}

pub const FUSION_INPUTS: [&str; 4] = ["flair", "t1", "t1c", "t2"];

pub struct MultiModalFusion {
    desc: InterfaceDescription,
    outputs: Vec<OutputSpec>,
}

impl Default for MultiModalFusion {
    fn default() -> Self {
        let labels = ["FLAIR", "T1", "T1 contrast-enhanced", "T2"];
        let mut elements: Vec<_> =
            FUSION_INPUTS.iter().zip(labels).map(|(name, label)| InterfaceElement::volume(name, label, "MR")).collect();
        elements.push(InterfaceElement::choice("fusion", "Fusion rule", &["mean", "max"], "mean").optional());
        Self {
            desc: InterfaceDescription::new("multi_modal_fusion", elements).expect("valid interface"),
            outputs: vec![
                OutputSpec::new("segmentation", ResponseKind::LabelVolume),
                OutputSpec::new("threshold", ResponseKind::ScalarMeasure),
                OutputSpec::new("centroid", ResponseKind::PointSet),
            ],
        }
    }
}

impl Predictor for MultiModalFusion {
    fn interface(&self) -> &InterfaceDescription {
        &self.desc
    }

    fn outputs(&self) -> &[OutputSpec] {
        &self.outputs
    }

    fn predict(&self, inputs: &Inputs) -> Result<BTreeMap<String, OutputValue>, PredictorError> {
        let volumes = FUSION_INPUTS
            .iter()
            .map(|n| volume_input(inputs, n).map(VolumeGrid::to_float))
            .collect::<Result<Vec<_>, _>>()?;
        let geometry = *volumes[0].geometry();
        if let Some((name, v)) = FUSION_INPUTS.iter().zip(&volumes).find(|(_, v)| v.dims() != geometry.dims) {
            return Err(PredictorError(format!(
                "input {name:?} has dims {:?}, expected {:?}",
                v.dims(),
                geometry.dims
            )));
        }
        let rule = text_input(inputs, "fusion")?;
        // mean is accumulated in f64 so four identical inputs fuse to themselves exactly
        let fused: Vec<f32> = (0..geometry.len())
            .map(|i| match rule {
                "max" => volumes.iter().map(|v| v.voxels()[i]).fold(f32::NEG_INFINITY, f32::max),
                _ => (volumes.iter().map(|v| f64::from(v.voxels()[i])).sum::<f64>() / 4.0) as f32,
            })
            .collect();
        let fused = Volume::from_parts(geometry, fused)?;
        let (mask, t, _) = threshold(&fused, AUTOMATIC_THRESHOLD)?;

        let mut sum = [0.0f64; 3];
        let mut count = 0usize;
        let [nx, ny, _] = geometry.dims;
        for (i, _) in mask.voxels().iter().enumerate().filter(|(_, &m)| m != 0) {
            let p = geometry.physical_point([i % nx, (i / nx) % ny, i / (nx * ny)]);
            for a in 0..3 {
                sum[a] += p[a];
            }
            count += 1;
        }
        let centroid = if count == 0 { Vec::new() } else { vec![sum.map(|s| s / count as f64)] };

        Ok([
            ("segmentation".to_string(), OutputValue::Volume(mask.into())),
            ("threshold".to_string(), OutputValue::Measure { value: f64::from(t), unit: "normalized".into() }),
            ("centroid".to_string(), OutputValue::Points(centroid)),
        ]
        .into())
    }
}

/// The built-in predictors by catalog name.
pub fn builtin_predictors() -> BTreeMap<&'static str, Arc<dyn Predictor>> {
    let mut catalog: BTreeMap<&'static str, Arc<dyn Predictor>> = BTreeMap::new();
    catalog.insert("echo", Arc::new(Echo::default()));
    catalog.insert("threshold_segmenter", Arc::new(ThresholdSegmenter::default()));
    catalog.insert("multi_modal_fusion", Arc::new(MultiModalFusion::default()));
    catalog
}

/// Standard pipeline around a catalog predictor: segmenters normalize their
/// inputs and keep the largest connected component of the segmentation.
pub fn builtin_pipeline(name: &str) -> Option<Pipeline> {
    builtin_pipeline_with(name, |p| p)
}

/// As [`builtin_pipeline`], letting the caller wrap the predictor, e.g. in a
/// [`super::SimulatedCompute`].
pub fn builtin_pipeline_with(
    name: &str,
    wrap: impl FnOnce(Arc<dyn Predictor>) -> Arc<dyn Predictor>,
) -> Option<Pipeline> {
    let predictor = wrap(builtin_predictors().remove(name)?);
    let pipeline = match name {
        "echo" => Pipeline::bare(predictor).expect("echo declares one output"),
        _ => {
            Pipeline::new(vec![PreStep::ZNormalize], predictor, vec![PostStep::LargestComponent("segmentation".into())])
                .expect("segmentation output is declared")
        }
    };
    Some(pipeline)
}
