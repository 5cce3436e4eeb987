// SPDX-License-Identifier: Apache-2.0

//! Three-phase prediction pipelines: pre-processing, inference,
//! post-processing, each timed separately.

mod builtin;
mod cost;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::protocol::{
    validate_request, Constraints, FieldData, InterfaceDescription, PredictionRequest, RequestValue, ResponseField,
    ResponseKind, Violation,
};
use crate::volume::{self, Geometry, VolumeError, VolumeGrid};

pub use crate::protocol::PhaseTiming;
pub use builtin::{
    builtin_pipeline, builtin_pipeline_with, builtin_predictors, Echo, MultiModalFusion, ThresholdSegmenter,
    AUTOMATIC_THRESHOLD, BUILTIN_NAMES, FUSION_INPUTS,
};
pub use cost::SimulatedCompute;

/// Inputs handed to a predictor, keyed by element name. Optional elements
/// the request omitted are filled with their declared defaults, except
/// volumes, which are simply absent.
pub type Inputs = BTreeMap<String, RequestValue>;

#[derive(Debug, Clone, PartialEq)]
pub enum OutputValue {
    Volume(VolumeGrid),
    Measure { value: f64, unit: String },
    Text(String),
    Points(Vec<[f64; 3]>),
}

/// A name and kind the predictor promises to emit, in response order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputSpec {
    pub name: String,
    pub kind: ResponseKind,
}

impl OutputSpec {
    pub fn new(name: &str, kind: ResponseKind) -> Self {
        Self { name: name.to_string(), kind }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct PredictorError(pub String);

impl From<VolumeError> for PredictorError {
    fn from(e: VolumeError) -> Self {
        PredictorError(e.to_string())
    }
}

/// The pluggable inference step. Implementations must be deterministic for
/// fixed inputs.
pub trait Predictor: Send + Sync {
    fn interface(&self) -> &InterfaceDescription;
    fn outputs(&self) -> &[OutputSpec];
    fn predict(&self, inputs: &Inputs) -> Result<BTreeMap<String, OutputValue>, PredictorError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Preprocess,
    Inference,
    Postprocess,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Preprocess => "pre-processing",
            Phase::Inference => "inference",
            Phase::Postprocess => "post-processing",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("request rejected: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("{phase}: {source}")]
    Transform { phase: Phase, source: VolumeError },
    #[error("predictor failed: {0}")]
    Predictor(String),
    #[error("invalid pipeline: {0}")]
    Config(String),
}

/// Applied in order to every volume input before inference.
#[derive(Debug, Clone, PartialEq)]
pub enum PreStep {
    /// Converts to float32 and normalizes to zero mean, unit variance.
    ZNormalize,
    Resample([usize; 3]),
}

/// Applied in order to named predictor outputs after inference.
#[derive(Debug, Clone, PartialEq)]
pub enum PostStep {
    LargestComponent(String),
}

impl PostStep {
    fn target(&self) -> &str {
        match self {
            PostStep::LargestComponent(name) => name,
        }
    }
}

fn apply_pre(step: &PreStep, vol: &VolumeGrid) -> Result<VolumeGrid, VolumeError> {
    match step {
        PreStep::ZNormalize => Ok(VolumeGrid::Float32(volume::znormalize(&vol.to_float()))),
        PreStep::Resample(target) => volume::resample_to_shape(vol, *target),
    }
}

fn apply_post(step: &PostStep, value: OutputValue) -> Result<OutputValue, VolumeError> {
    match (step, value) {
        (PostStep::LargestComponent(_), OutputValue::Volume(v)) => {
            Ok(OutputValue::Volume(VolumeGrid::Uint8(volume::largest_connected_component(v.as_label()?))))
        }
        (_, _) => Err(VolumeError::Geometry("post step expects a volume output".into())),
    }
}

/// Resamples a label output back onto the reference lattice when needed
/// and stamps the reference spacing and origin on it.
fn restore_geometry(label: VolumeGrid, reference: &Geometry) -> Result<VolumeGrid, VolumeError> {
    let label = if label.dims() != reference.dims { volume::resample_to_shape(&label, reference.dims)? } else { label };
    label.with_frame(reference.spacing_mm, reference.origin_mm)
}

#[derive(Clone)]
pub struct Pipeline {
    pre: Vec<PreStep>,
    predictor: Arc<dyn Predictor>,
    post: Vec<PostStep>,
}

impl fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pipeline")
            .field("service", &self.interface().service_name())
            .field("pre", &self.pre)
            .field("post", &self.post)
            .finish()
    }
}

impl Pipeline {
    pub fn new(pre: Vec<PreStep>, predictor: Arc<dyn Predictor>, post: Vec<PostStep>) -> Result<Self, PipelineError> {
        for step in &post {
            let spec = predictor.outputs().iter().find(|o| o.name == step.target());
            match spec {
                Some(o) if o.kind == ResponseKind::LabelVolume => {}
                Some(o) => {
                    return Err(PipelineError::Config(format!(
                        "post step {step:?} needs a label volume, output {:?} is {}",
                        o.name,
                        o.kind.as_str()
                    )))
                }
                None => {
                    return Err(PipelineError::Config(format!(
                        "post step {step:?} targets an output the predictor does not declare"
                    )))
                }
            }
        }
        let mut names = std::collections::HashSet::new();
        if !predictor.outputs().iter().all(|o| !o.name.is_empty() && names.insert(o.name.as_str())) {
            return Err(PipelineError::Config("predictor output names must be nonempty and distinct".into()));
        }
        Ok(Self { pre, predictor, post })
    }

    /// Pipeline with no transforms around the predictor.
    pub fn bare(predictor: Arc<dyn Predictor>) -> Result<Self, PipelineError> {
        Self::new(Vec::new(), predictor, Vec::new())
    }

    pub fn interface(&self) -> &InterfaceDescription {
        self.predictor.interface()
    }

    pub fn outputs(&self) -> &[OutputSpec] {
        self.predictor.outputs()
    }

    /// Inputs with defaults filled in for omitted optional elements.
    fn bind_inputs(&self, req: &PredictionRequest) -> Inputs {
        let mut inputs = Inputs::new();
        for element in self.interface().elements() {
            let value = match (req.values.get(&element.name), &element.constraints) {
                (Some(v), _) => v.clone(),
                (None, Constraints::Volume { .. }) => continue,
                (None, Constraints::Slider { default, .. }) => RequestValue::Number(*default),
                (None, Constraints::Checkbox { default }) => RequestValue::Flag(*default),
                (None, Constraints::Choice { default, .. }) => RequestValue::Text(default.clone()),
                (None, Constraints::Text { default }) => RequestValue::Text(default.clone()),
            };
            inputs.insert(element.name.clone(), value);
        }
        inputs
    }

    /// Validates `req`, then runs the three phases.
    ///
    /// Label outputs are returned on the lattice of the first volume input
    /// (in interface order).
    pub fn run(&self, req: &PredictionRequest) -> Result<(Vec<ResponseField>, PhaseTiming), PipelineError> {
        validate_request(self.interface(), req).map_err(PipelineError::Invalid)?;
        let mut inputs = self.bind_inputs(req);
        let reference = self.interface().volume_elements().find_map(|e| match inputs.get(&e.name) {
            Some(RequestValue::Volume(v)) => Some(*v.geometry()),
            _ => None,
        });

        let started = Instant::now();
        for element in self.interface().volume_elements() {
            if let Some(RequestValue::Volume(v)) = inputs.get_mut(&element.name) {
                let mut current: Option<VolumeGrid> = None;
                for step in &self.pre {
                    let next = apply_pre(step, current.as_ref().unwrap_or(v))
                        .map_err(|source| PipelineError::Transform { phase: Phase::Preprocess, source })?;
                    current = Some(next);
                }
                if let Some(c) = current {
                    *v = Arc::new(c);
                }
            }
        }
        let preprocess_s = started.elapsed().as_secs_f64();

        let started = Instant::now();
        let mut outputs = self.predictor.predict(&inputs).map_err(|e| PipelineError::Predictor(e.0))?;
        let inference_s = started.elapsed().as_secs_f64();

        let started = Instant::now();
        for step in &self.post {
            let name = step.target();
            let value = outputs
                .remove(name)
                .ok_or_else(|| PipelineError::Predictor(format!("declared output {name:?} missing")))?;
            let value = apply_post(step, value)
                .map_err(|source| PipelineError::Transform { phase: Phase::Postprocess, source })?;
            outputs.insert(name.to_string(), value);
        }
        let mut fields = Vec::with_capacity(self.outputs().len());
        for spec in self.outputs() {
            let value = outputs
                .remove(&spec.name)
                .ok_or_else(|| PipelineError::Predictor(format!("declared output {:?} missing", spec.name)))?;
            let data = match (spec.kind, value) {
                (ResponseKind::LabelVolume, OutputValue::Volume(v)) => {
                    let v = match &reference {
                        Some(g) => restore_geometry(v, g)
                            .map_err(|source| PipelineError::Transform { phase: Phase::Postprocess, source })?,
                        None => v,
                    };
                    FieldData::LabelVolume(v)
                }
                (ResponseKind::ImageVolume, OutputValue::Volume(v)) => FieldData::ImageVolume(v),
                (ResponseKind::PlainText, OutputValue::Text(s)) => FieldData::PlainText(s),
                (ResponseKind::ScalarMeasure, OutputValue::Measure { value, unit }) => {
                    FieldData::ScalarMeasure { value, unit }
                }
                (ResponseKind::PointSet, OutputValue::Points(p)) => FieldData::PointSet(p),
                (kind, other) => {
                    return Err(PipelineError::Predictor(format!(
                        "output {:?} declared as {} but produced {other:?}",
                        spec.name,
                        kind.as_str()
                    )))
                }
            };
            let field = ResponseField::new(spec.name.clone(), data);
            field.check().map_err(|e| PipelineError::Predictor(e.to_string()))?;
            fields.push(field);
        }
        let postprocess_s = started.elapsed().as_secs_f64();

        Ok((fields, PhaseTiming { preprocess_s, inference_s, postprocess_s }))
    }
}
