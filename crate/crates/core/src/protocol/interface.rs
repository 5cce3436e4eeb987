// SPDX-License-Identifier: Apache-2.0

//! Server-declared request interfaces.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ProtocolError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Volume,
    ScalarSlider,
    Checkbox,
    Choice,
    Text,
}

impl ElementKind {
    pub const ALL: [ElementKind; 5] =
        [ElementKind::Volume, ElementKind::ScalarSlider, ElementKind::Checkbox, ElementKind::Choice, ElementKind::Text];

    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::Volume => "volume",
            ElementKind::ScalarSlider => "scalar_slider",
            ElementKind::Checkbox => "checkbox",
            ElementKind::Choice => "choice",
            ElementKind::Text => "text",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// Kind-specific element settings. The variant determines the element kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraints {
    Volume { expected_modality: String },
    Slider { minimum: f64, maximum: f64, default: f64 },
    Checkbox { default: bool },
    Choice { options: Vec<String>, default: String },
    Text { default: String },
}

impl Constraints {
    pub fn kind(&self) -> ElementKind {
        match self {
            Constraints::Volume { .. } => ElementKind::Volume,
            Constraints::Slider { .. } => ElementKind::ScalarSlider,
            Constraints::Checkbox { .. } => ElementKind::Checkbox,
            Constraints::Choice { .. } => ElementKind::Choice,
            Constraints::Text { .. } => ElementKind::Text,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct VolumeWire {
    #[serde(default)]
    expected_modality: String,
}

#[derive(Serialize, Deserialize)]
struct SliderWire {
    minimum: f64,
    maximum: f64,
    default: f64,
}

#[derive(Serialize, Deserialize)]
struct CheckboxWire {
    default: bool,
}

#[derive(Serialize, Deserialize)]
struct ChoiceWire {
    options: Vec<String>,
    default: String,
}

#[derive(Serialize, Deserialize)]
struct TextWire {
    #[serde(default)]
    default: String,
}

/// One field a prediction request must (or may) carry.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceElement {
    pub name: String,
    pub label: String,
    pub required: bool,
    pub constraints: Constraints,
}

impl InterfaceElement {
    fn new(name: &str, label: &str, constraints: Constraints) -> Self {
        Self { name: name.to_string(), label: label.to_string(), required: true, constraints }
    }

    pub fn volume(name: &str, label: &str, expected_modality: &str) -> Self {
        Self::new(name, label, Constraints::Volume { expected_modality: expected_modality.to_string() })
    }

    pub fn slider(name: &str, label: &str, minimum: f64, maximum: f64, default: f64) -> Self {
        Self::new(name, label, Constraints::Slider { minimum, maximum, default })
    }

    pub fn checkbox(name: &str, label: &str, default: bool) -> Self {
        Self::new(name, label, Constraints::Checkbox { default })
    }

    pub fn choice(name: &str, label: &str, options: &[&str], default: &str) -> Self {
        Self::new(
            name,
            label,
            Constraints::Choice {
                options: options.iter().map(|s| s.to_string()).collect(),
                default: default.to_string(),
            },
        )
    }

    pub fn text(name: &str, label: &str, default: &str) -> Self {
        Self::new(name, label, Constraints::Text { default: default.to_string() })
    }

    pub fn optional(mut self) -> Self {
        self.required = false;
        self
    }

    pub fn kind(&self) -> ElementKind {
        self.constraints.kind()
    }

    pub fn check(&self) -> Result<(), ProtocolError> {
        let bad = |msg: String| Err(ProtocolError::Invariant(format!("element {:?}: {msg}", self.name)));
        if self.name.is_empty() {
            return Err(ProtocolError::Invariant("element name must be nonempty".into()));
        }
        match &self.constraints {
            Constraints::Slider { minimum, maximum, default } => {
                if ![minimum, maximum, default].iter().all(|v| v.is_finite()) {
                    return bad("slider bounds must be finite".into());
                }
                if !(minimum < maximum) {
                    return bad(format!("slider minimum {minimum} must be below maximum {maximum}"));
                }
                if !(minimum <= default && default <= maximum) {
                    return bad(format!("slider default {default} outside [{minimum}, {maximum}]"));
                }
            }
            Constraints::Choice { options, default } => {
                if options.is_empty() {
                    return bad("choice needs at least one option".into());
                }
                if !options.contains(default) {
                    return bad(format!("choice default {default:?} is not an option"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn to_wire(&self) -> ElementWire {
        let constraints = match &self.constraints {
            Constraints::Volume { expected_modality } => {
                serde_json::to_value(VolumeWire { expected_modality: expected_modality.clone() })
            }
            Constraints::Slider { minimum, maximum, default } => {
                serde_json::to_value(SliderWire { minimum: *minimum, maximum: *maximum, default: *default })
            }
            Constraints::Checkbox { default } => serde_json::to_value(CheckboxWire { default: *default }),
            Constraints::Choice { options, default } => {
                serde_json::to_value(ChoiceWire { options: options.clone(), default: default.clone() })
            }
            Constraints::Text { default } => serde_json::to_value(TextWire { default: default.clone() }),
        }
        .expect("constraint records serialize");
        ElementWire {
            name: self.name.clone(),
            kind: self.kind().as_str().to_string(),
            label: self.label.clone(),
            required: self.required,
            constraints,
        }
    }

    fn from_wire(w: ElementWire) -> Result<Self, ProtocolError> {
        let kind = ElementKind::parse(&w.kind)
            .ok_or_else(|| ProtocolError::UnsupportedKind { what: "element", kind: w.kind.clone() })?;
        let ctx = |e: serde_json::Error| ProtocolError::Malformed(format!("constraints of element {:?}: {e}", w.name));
        let raw = if w.constraints.is_null() { Value::Object(Default::default()) } else { w.constraints };
        let constraints = match kind {
            ElementKind::Volume => {
                let c: VolumeWire = serde_json::from_value(raw).map_err(ctx)?;
                Constraints::Volume { expected_modality: c.expected_modality }
            }
            ElementKind::ScalarSlider => {
                let c: SliderWire = serde_json::from_value(raw).map_err(ctx)?;
                Constraints::Slider { minimum: c.minimum, maximum: c.maximum, default: c.default }
            }
            ElementKind::Checkbox => {
                let c: CheckboxWire = serde_json::from_value(raw).map_err(ctx)?;
                Constraints::Checkbox { default: c.default }
            }
            ElementKind::Choice => {
                let c: ChoiceWire = serde_json::from_value(raw).map_err(ctx)?;
                Constraints::Choice { options: c.options, default: c.default }
            }
            ElementKind::Text => {
                let c: TextWire = serde_json::from_value(raw).map_err(ctx)?;
                Constraints::Text { default: c.default }
            }
        };
        let element = Self { name: w.name, label: w.label, required: w.required, constraints };
        element.check()?;
        Ok(element)
    }
}

#[derive(Serialize, Deserialize)]
struct ElementWire {
    name: String,
    kind: String,
    #[serde(default)]
    label: String,
    #[serde(default = "default_required")]
    required: bool,
    #[serde(default)]
    constraints: Value,
}

fn default_required() -> bool {
    true
}

#[derive(Serialize, Deserialize)]
struct DescriptionWire {
    name: String,
    elements: Vec<ElementWire>,
}

/// The ordered list of elements a service expects in each request.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceDescription {
    service_name: String,
    elements: Vec<InterfaceElement>,
}

impl InterfaceDescription {
    pub fn new(service_name: impl Into<String>, elements: Vec<InterfaceElement>) -> Result<Self, ProtocolError> {
        for e in &elements {
            e.check()?;
        }
        let mut seen = HashSet::new();
        for e in &elements {
            if !seen.insert(e.name.as_str()) {
                return Err(ProtocolError::Invariant(format!("duplicate element name {:?}", e.name)));
            }
        }
        if !elements.iter().any(|e| e.kind() == ElementKind::Volume) {
            return Err(ProtocolError::Invariant("interface must declare at least one volume element".into()));
        }
        Ok(Self { service_name: service_name.into(), elements })
    }

    pub fn service_name(&self) -> &str {
        &self.service_name
    }

    pub fn elements(&self) -> &[InterfaceElement] {
        &self.elements
    }

    pub fn element(&self, name: &str) -> Option<&InterfaceElement> {
        self.elements.iter().find(|e| e.name == name)
    }

    pub fn volume_elements(&self) -> impl Iterator<Item = &InterfaceElement> {
        self.elements.iter().filter(|e| e.kind() == ElementKind::Volume)
    }
}

pub fn encode_interface(desc: &InterfaceDescription) -> String {
    let wire = DescriptionWire {
        name: desc.service_name.clone(),
        elements: desc.elements.iter().map(InterfaceElement::to_wire).collect(),
    };
    serde_json::to_string(&wire).expect("interface serializes")
}

pub fn decode_interface(text: &str) -> Result<InterfaceDescription, ProtocolError> {
    let wire: DescriptionWire = serde_json::from_str(text)?;
    let elements = wire.elements.into_iter().map(InterfaceElement::from_wire).collect::<Result<Vec<_>, _>>()?;
    InterfaceDescription::new(wire.name, elements)
}
