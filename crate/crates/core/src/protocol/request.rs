// SPDX-License-Identifier: Apache-2.0

//! Prediction requests and their validation against a declared interface.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Constraints, ElementKind, InterfaceDescription, InterfaceElement};
use crate::volume::{decode_mha, encode_mha, VolumeGrid};

/// A value bound to one interface element.
#[derive(Debug, Clone, PartialEq)]
pub enum RequestValue {
    Volume(Arc<VolumeGrid>),
    Number(f64),
    Flag(bool),
    Text(String),
}

impl RequestValue {
    pub fn volume(v: impl Into<VolumeGrid>) -> Self {
        RequestValue::Volume(Arc::new(v.into()))
    }

    fn type_name(&self) -> &'static str {
        match self {
            RequestValue::Volume(_) => "volume",
            RequestValue::Number(_) => "number",
            RequestValue::Flag(_) => "boolean",
            RequestValue::Text(_) => "string",
        }
    }

    /// Interprets a multipart body according to the element it is bound to:
    /// MHA bytes for volumes, UTF-8 text for everything else.
    pub fn from_part(element: &InterfaceElement, bytes: &[u8]) -> Result<Self, String> {
        if element.kind() == ElementKind::Volume {
            return decode_mha(bytes).map(RequestValue::volume).map_err(|e| format!("invalid volume: {e}"));
        }
        let text = std::str::from_utf8(bytes).map_err(|_| "value is not UTF-8".to_string())?;
        Self::from_text(element, text)
    }

    /// Parses a textual value for a non-volume element.
    pub fn from_text(element: &InterfaceElement, text: &str) -> Result<Self, String> {
        match element.kind() {
            ElementKind::Volume => Err("volume values must be uploaded as images".into()),
            ElementKind::ScalarSlider => text
                .trim()
                .parse::<f64>()
                .map(RequestValue::Number)
                .map_err(|_| format!("cannot parse {text:?} as a number")),
            ElementKind::Checkbox => match text.trim().to_ascii_lowercase().as_str() {
                "true" | "1" | "on" | "yes" => Ok(RequestValue::Flag(true)),
                "false" | "0" | "off" | "no" => Ok(RequestValue::Flag(false)),
                _ => Err(format!("cannot parse {text:?} as a boolean")),
            },
            ElementKind::Choice | ElementKind::Text => Ok(RequestValue::Text(text.to_string())),
        }
    }

    /// Multipart body for this value; inverse of [`RequestValue::from_part`].
    pub fn to_part(&self) -> Vec<u8> {
        match self {
            RequestValue::Volume(v) => encode_mha(v),
            RequestValue::Number(x) => x.to_string().into_bytes(),
            RequestValue::Flag(b) => b.to_string().into_bytes(),
            RequestValue::Text(s) => s.clone().into_bytes(),
        }
    }
}

/// Values keyed by element name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionRequest {
    pub values: BTreeMap<String, RequestValue>,
}

impl PredictionRequest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: RequestValue) -> Self {
        self.values.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&RequestValue> {
        self.values.get(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub element: String,
    pub reason: String,
}

impl Violation {
    pub fn new(element: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { element: element.into(), reason: reason.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.element, self.reason)
    }
}

fn check_value(element: &InterfaceElement, value: &RequestValue) -> Option<String> {
    let mismatch = || Some(format!("expected {} value, got {}", element.kind().as_str(), value.type_name()));
    match (&element.constraints, value) {
        (Constraints::Volume { .. }, RequestValue::Volume(_)) => None,
        (Constraints::Slider { minimum, maximum, .. }, RequestValue::Number(x)) => {
            if !x.is_finite() {
                Some(format!("{x} is not a finite number"))
            } else if x < minimum || x > maximum {
                Some(format!("{x} outside [{minimum}, {maximum}]"))
            } else {
                None
            }
        }
        (Constraints::Checkbox { .. }, RequestValue::Flag(_)) => None,
        (Constraints::Choice { options, .. }, RequestValue::Text(s)) => {
            (!options.contains(s)).then(|| format!("{s:?} is not one of {options:?}"))
        }
        (Constraints::Text { .. }, RequestValue::Text(_)) => None,
        _ => mismatch(),
    }
}

/// Checks `req` against `desc`, reporting every violation.
///
/// Violations for declared elements come first, in declaration order,
/// followed by entries naming undeclared elements.
pub fn validate_request(desc: &InterfaceDescription, req: &PredictionRequest) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    for element in desc.elements() {
        match req.values.get(&element.name) {
            None if element.required => violations.push(Violation::new(&element.name, "missing required")),
            None => {}
            Some(value) => {
                if let Some(reason) = check_value(element, value) {
                    violations.push(Violation::new(&element.name, reason));
                }
            }
        }
    }
    for name in req.values.keys() {
        if desc.element(name).is_none() {
            violations.push(Violation::new(name, "unknown element"));
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Volume;

    fn vol() -> RequestValue {
        RequestValue::volume(Volume::from_vec([1, 1, 1], vec![0.0f32]).unwrap())
    }

    fn desc() -> InterfaceDescription {
        InterfaceDescription::new(
            "d",
            vec![
                InterfaceElement::volume("t1", "T1", "MR"),
                InterfaceElement::slider("s", "S", 0.0, 1.0, 0.5).optional(),
                InterfaceElement::checkbox("c", "C", false).optional(),
                InterfaceElement::choice("m", "M", &["mean", "max"], "mean").optional(),
                InterfaceElement::text("note", "N", "").optional(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn missing_required() {
        let v = validate_request(&desc(), &PredictionRequest::new()).unwrap_err();
        assert_eq!(v, vec![Violation::new("t1", "missing required")]);
    }

    #[test]
    fn slider_range() {
        let ok = PredictionRequest::new().with("t1", vol()).with("s", RequestValue::Number(0.5));
        assert!(validate_request(&desc(), &ok).is_ok());
        let bad = ok.clone().with("s", RequestValue::Number(1.5));
        let v = validate_request(&desc(), &bad).unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].element, "s");
        let nan = ok.with("s", RequestValue::Number(f64::NAN));
        assert!(validate_request(&desc(), &nan).is_err());
    }

    #[test]
    fn every_violation_reported() {
        let req = PredictionRequest::new()
            .with("s", RequestValue::Text("x".into()))
            .with("c", RequestValue::Number(1.0))
            .with("m", RequestValue::Text("median".into()))
            .with("note", vol())
            .with("zzz", RequestValue::Flag(true));
        let v = validate_request(&desc(), &req).unwrap_err();
        let names: Vec<_> = v.iter().map(|v| v.element.as_str()).collect();
        assert_eq!(names, ["t1", "s", "c", "m", "note", "zzz"]);
    }

    #[test]
    fn part_parsing() {
        let d = desc();
        let s = d.element("s").unwrap();
        assert_eq!(RequestValue::from_part(s, b" 0.25 "), Ok(RequestValue::Number(0.25)));
        assert!(RequestValue::from_part(s, b"abc").is_err());
        let c = d.element("c").unwrap();
        assert_eq!(RequestValue::from_part(c, b"true"), Ok(RequestValue::Flag(true)));
        assert!(RequestValue::from_part(c, b"maybe").is_err());
        let t1 = d.element("t1").unwrap();
        assert!(RequestValue::from_part(t1, b"garbage").unwrap_err().contains("invalid volume"));
        let v = vol();
        assert_eq!(RequestValue::from_part(t1, &v.to_part()).unwrap(), v);
        let n = RequestValue::Number(0.1 + 0.2);
        assert_eq!(RequestValue::from_part(s, &n.to_part()).unwrap(), n);
    }
}
