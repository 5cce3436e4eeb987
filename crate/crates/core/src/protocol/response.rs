// SPDX-License-Identifier: Apache-2.0

//! Self-describing prediction responses.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ProtocolError;
use crate::volume::{decode_volume_payload, encode_volume_payload, VolumeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    LabelVolume,
    ImageVolume,
    PlainText,
    ScalarMeasure,
    PointSet,
}

impl ResponseKind {
    pub const ALL: [ResponseKind; 5] = [
        ResponseKind::LabelVolume,
        ResponseKind::ImageVolume,
        ResponseKind::PlainText,
        ResponseKind::ScalarMeasure,
        ResponseKind::PointSet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ResponseKind::LabelVolume => "label_volume",
            ResponseKind::ImageVolume => "image_volume",
            ResponseKind::PlainText => "plain_text",
            ResponseKind::ScalarMeasure => "scalar_measure",
            ResponseKind::PointSet => "point_set",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    LabelVolume(VolumeGrid),
    ImageVolume(VolumeGrid),
    PlainText(String),
    ScalarMeasure {
        value: f64,
        unit: String,
    },
    /// Physical-space points in millimetres.
    PointSet(Vec<[f64; 3]>),
}

impl FieldData {
    pub fn kind(&self) -> ResponseKind {
        match self {
            FieldData::LabelVolume(_) => ResponseKind::LabelVolume,
            FieldData::ImageVolume(_) => ResponseKind::ImageVolume,
            FieldData::PlainText(_) => ResponseKind::PlainText,
            FieldData::ScalarMeasure { .. } => ResponseKind::ScalarMeasure,
            FieldData::PointSet(_) => ResponseKind::PointSet,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MeasureWire {
    value: f64,
    #[serde(default)]
    unit: String,
}

/// One named, typed datum of a prediction response.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseField {
    pub name: String,
    pub data: FieldData,
}

fn label_values_ok(v: &VolumeGrid) -> bool {
    match v {
        VolumeGrid::Uint8(_) => true,
        VolumeGrid::Float32(f) => f.voxels().iter().all(|&x| x >= 0.0 && x.fract() == 0.0),
    }
}

impl ResponseField {
    pub fn new(name: impl Into<String>, data: FieldData) -> Self {
        Self { name: name.into(), data }
    }

    pub fn kind(&self) -> ResponseKind {
        self.data.kind()
    }

    pub fn check(&self) -> Result<(), ProtocolError> {
        if self.name.is_empty() {
            return Err(ProtocolError::Invariant("response field name must be nonempty".into()));
        }
        if let FieldData::LabelVolume(v) = &self.data {
            if !label_values_ok(v) {
                return Err(ProtocolError::Invariant(format!(
                    "label volume {:?} holds non-integer or negative values",
                    self.name
                )));
            }
        }
        Ok(())
    }

    fn to_wire(&self) -> FieldWire {
        let payload = match &self.data {
            FieldData::LabelVolume(v) | FieldData::ImageVolume(v) => Value::String(encode_volume_payload(v)),
            FieldData::PlainText(s) => Value::String(s.clone()),
            FieldData::ScalarMeasure { value, unit } => {
                serde_json::to_value(MeasureWire { value: *value, unit: unit.clone() }).expect("measure serializes")
            }
            FieldData::PointSet(points) => serde_json::to_value(points).expect("points serialize"),
        };
        FieldWire { name: self.name.clone(), kind: self.kind().as_str().to_string(), payload }
    }

    fn from_wire(w: FieldWire) -> Result<Self, ProtocolError> {
        let kind = ResponseKind::parse(&w.kind)
            .ok_or_else(|| ProtocolError::UnsupportedKind { what: "response field", kind: w.kind.clone() })?;
        let name = w.name;
        let malformed = |msg: String| ProtocolError::Malformed(format!("payload of field {name:?}: {msg}"));
        let as_str = |v: Value| match v {
            Value::String(s) => Ok(s),
            other => Err(malformed(format!("expected a string, got {other}"))),
        };
        let data = match kind {
            ResponseKind::LabelVolume | ResponseKind::ImageVolume => {
                let vol = decode_volume_payload(&as_str(w.payload)?).map_err(|e| malformed(e.to_string()))?;
                if kind == ResponseKind::LabelVolume {
                    FieldData::LabelVolume(vol)
                } else {
                    FieldData::ImageVolume(vol)
                }
            }
            ResponseKind::PlainText => FieldData::PlainText(as_str(w.payload)?),
            ResponseKind::ScalarMeasure => {
                let m: MeasureWire = serde_json::from_value(w.payload).map_err(|e| malformed(e.to_string()))?;
                FieldData::ScalarMeasure { value: m.value, unit: m.unit }
            }
            ResponseKind::PointSet => {
                FieldData::PointSet(serde_json::from_value(w.payload).map_err(|e| malformed(e.to_string()))?)
            }
        };
        let field = Self { name, data };
        field.check()?;
        Ok(field)
    }
}

#[derive(Serialize, Deserialize)]
struct FieldWire {
    name: String,
    kind: String,
    payload: Value,
}

/// Wall-clock seconds spent in each pipeline phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub preprocess_s: f64,
    pub inference_s: f64,
    pub postprocess_s: f64,
}

impl PhaseTiming {
    pub fn total_s(&self) -> f64 {
        self.preprocess_s + self.inference_s + self.postprocess_s
    }

    fn check(&self) -> Result<(), ProtocolError> {
        let all = [self.preprocess_s, self.inference_s, self.postprocess_s];
        if all.iter().all(|t| *t >= 0.0 && t.is_finite()) {
            Ok(())
        } else {
            Err(ProtocolError::Invariant(format!("timing entries must be nonnegative, got {all:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResponse {
    pub fields: Vec<ResponseField>,
    pub timing: PhaseTiming,
}

impl PredictionResponse {
    pub fn field(&self, name: &str) -> Option<&ResponseField> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Serialize, Deserialize)]
struct ResponseWire {
    fields: Vec<FieldWire>,
    timing: PhaseTiming,
}

pub fn encode_response(resp: &PredictionResponse) -> String {
    let wire = ResponseWire { fields: resp.fields.iter().map(ResponseField::to_wire).collect(), timing: resp.timing };
    serde_json::to_string(&wire).expect("response serializes")
}

pub fn decode_response(text: &str) -> Result<PredictionResponse, ProtocolError> {
    let wire: ResponseWire = serde_json::from_str(text)?;
    wire.timing.check()?;
    let fields = wire.fields.into_iter().map(ResponseField::from_wire).collect::<Result<Vec<_>, _>>()?;
    Ok(PredictionResponse { fields, timing: wire.timing })
}
