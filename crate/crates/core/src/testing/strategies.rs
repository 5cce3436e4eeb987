// SPDX-License-Identifier: Apache-2.0

//! proptest strategies for volumes and wire messages.

use std::collections::BTreeMap;

use proptest::prelude::*;

use crate::protocol::{
    AnnounceMessage, FieldData, InterfaceDescription, InterfaceElement, PhaseTiming, PredictionRequest,
    PredictionResponse, RequestValue, ResponseField,
};
use crate::volume::{Geometry, Volume, VolumeGrid};

fn finite_f32() -> impl Strategy<Value = f32> {
    use proptest::num::f32;
    f32::POSITIVE | f32::NEGATIVE | f32::NORMAL | f32::SUBNORMAL | f32::ZERO
}

fn finite_f64() -> impl Strategy<Value = f64> {
    use proptest::num::f64;
    f64::POSITIVE | f64::NEGATIVE | f64::NORMAL | f64::SUBNORMAL | f64::ZERO
}

pub fn geometry(max_dim: usize) -> impl Strategy<Value = Geometry> {
    (
        [1..=max_dim, 1..=max_dim, 1..=max_dim],
        [1e-3f64..100.0, 1e-3f64..100.0, 1e-3f64..100.0],
        [-1e3f64..1e3, -1e3f64..1e3, -1e3f64..1e3],
    )
        .prop_map(|(d, s, o)| Geometry::new(d, s, o).unwrap())
}

pub fn float_volume(max_dim: usize) -> impl Strategy<Value = Volume<f32>> {
    geometry(max_dim).prop_flat_map(|g| {
        proptest::collection::vec(finite_f32(), g.len()).prop_map(move |v| Volume::from_parts(g, v).unwrap())
    })
}

pub fn label_volume(max_dim: usize) -> impl Strategy<Value = Volume<u8>> {
    geometry(max_dim).prop_flat_map(|g| {
        proptest::collection::vec(any::<u8>(), g.len()).prop_map(move |v| Volume::from_parts(g, v).unwrap())
    })
}

pub fn volume_grid(max_dim: usize) -> impl Strategy<Value = VolumeGrid> {
    prop_oneof![float_volume(max_dim).prop_map(VolumeGrid::from), label_volume(max_dim).prop_map(VolumeGrid::from)]
}

/// Binary masks with a random foreground density.
pub fn binary_volume(max_dim: usize) -> impl Strategy<Value = Volume<u8>> {
    ([1..=max_dim, 1..=max_dim, 1..=max_dim], 0.0f64..1.0).prop_flat_map(|(d, density)| {
        let g = Geometry::new(d, [1.0; 3], [0.0; 3]).unwrap();
        proptest::collection::vec(proptest::bool::weighted(density), g.len())
            .prop_map(move |v| Volume::from_parts(g, v.into_iter().map(u8::from).collect()).unwrap())
    })
}

/// Volumes drawing every voxel from a palette of 2 to `max_values` values.
pub fn few_valued_volume(max_dim: usize, max_values: usize) -> impl Strategy<Value = Volume<f32>> {
    ([1..=max_dim, 1..=max_dim, 1..=max_dim], proptest::collection::vec(-1e3f32..1e3, 2..=max_values)).prop_flat_map(
        |(d, palette)| {
            let g = Geometry::new(d, [1.0; 3], [0.0; 3]).unwrap();
            let n = palette.len();
            proptest::collection::vec(0..n, g.len())
                .prop_map(move |idx| Volume::from_parts(g, idx.into_iter().map(|i| palette[i]).collect()).unwrap())
        },
    )
}

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,8}"
}

fn element(name: String) -> impl Strategy<Value = InterfaceElement> {
    let label = ".{0,12}";
    prop_oneof![
        (label, ".{0,6}").prop_map({
            let name = name.clone();
            move |(l, m)| InterfaceElement::volume(&name, &l, &m)
        }),
        (label, -1e6f64..1e6, 1e-3f64..1e6, 0.0f64..=1.0).prop_map({
            let name = name.clone();
            move |(l, lo, width, t)| {
                let hi = lo + width;
                InterfaceElement::slider(&name, &l, lo, hi, (lo + t * width).clamp(lo, hi))
            }
        }),
        (label, any::<bool>()).prop_map({
            let name = name.clone();
            move |(l, d)| InterfaceElement::checkbox(&name, &l, d)
        }),
        (label, proptest::collection::btree_set(ident(), 1..5), any::<prop::sample::Index>()).prop_map({
            let name = name.clone();
            move |(l, opts, i)| {
                let opts: Vec<&str> = opts.iter().map(String::as_str).collect();
                let d = opts[i.index(opts.len())];
                InterfaceElement::choice(&name, &l, &opts, d)
            }
        }),
        (label, ".{0,10}").prop_map(move |(l, d)| InterfaceElement::text(&name, &l, &d)),
    ]
}

pub fn interface() -> impl Strategy<Value = InterfaceDescription> {
    (ident(), proptest::collection::btree_set(ident(), 0..6), ".{0,6}")
        .prop_flat_map(|(service, names, modality)| {
            let extra: Vec<_> = names.into_iter().map(|n| format!("{n}_x")).map(element).collect();
            let optional = proptest::collection::vec(any::<bool>(), extra.len());
            (Just(service), Just(modality), extra, optional, any::<prop::sample::Index>())
        })
        .prop_map(|(service, modality, mut elements, optional, at)| {
            for (e, opt) in elements.iter_mut().zip(optional) {
                e.required = !opt;
            }
            let pos = at.index(elements.len() + 1);
            elements.insert(pos, InterfaceElement::volume("image", "Image", &modality));
            InterfaceDescription::new(service, elements).unwrap()
        })
}

fn small_volume() -> impl Strategy<Value = VolumeGrid> {
    volume_grid(3)
}

fn label_field_volume() -> impl Strategy<Value = VolumeGrid> {
    prop_oneof![
        label_volume(3).prop_map(VolumeGrid::from),
        geometry(3).prop_flat_map(|g| {
            proptest::collection::vec(0u16..1000, g.len()).prop_map(move |v| {
                VolumeGrid::from(Volume::from_parts(g, v.into_iter().map(f32::from).collect()).unwrap())
            })
        }),
    ]
}

fn field_data() -> impl Strategy<Value = FieldData> {
    prop_oneof![
        label_field_volume().prop_map(FieldData::LabelVolume),
        small_volume().prop_map(FieldData::ImageVolume),
        ".{0,40}".prop_map(FieldData::PlainText),
        (finite_f64(), ".{0,5}").prop_map(|(value, unit)| FieldData::ScalarMeasure { value, unit }),
        proptest::collection::vec([finite_f64(), finite_f64(), finite_f64()], 0..5).prop_map(FieldData::PointSet),
    ]
}

pub fn response() -> impl Strategy<Value = PredictionResponse> {
    (proptest::collection::btree_set(ident(), 0..5), [0.0f64..1e4, 0.0f64..1e4, 0.0f64..1e4])
        .prop_flat_map(|(names, t)| {
            let fields: Vec<_> =
                names.into_iter().map(|n| field_data().prop_map(move |d| ResponseField::new(n.clone(), d))).collect();
            (fields, Just(PhaseTiming { preprocess_s: t[0], inference_s: t[1], postprocess_s: t[2] }))
        })
        .prop_map(|(fields, timing)| PredictionResponse { fields, timing })
}

pub fn announce() -> impl Strategy<Value = AnnounceMessage> {
    (
        "[A-Za-z0-9]{1,32}",
        "(http|https)://[a-z]{1,10}(\\.[a-z]{2,5})?(:[1-9][0-9]{1,3})?(/[a-z0-9]{0,8})?",
        ".{1,16}",
        ".{0,40}",
        ".{0,6}",
        ".{0,10}",
        ".{0,12}",
    )
        .prop_map(|(api_key, prediction_url, name, description, modality, anatomy, task)| AnnounceMessage {
            api_key,
            prediction_url,
            name,
            description,
            modality,
            anatomy,
            task,
        })
}

fn request_value() -> impl Strategy<Value = RequestValue> {
    prop_oneof![
        volume_grid(2).prop_map(|v| RequestValue::Volume(v.into())),
        any::<f64>().prop_map(RequestValue::Number),
        any::<bool>().prop_map(RequestValue::Flag),
        ".{0,8}".prop_map(RequestValue::Text),
    ]
}

/// Arbitrary value maps whose keys are drawn partly from `names`.
pub fn value_map(names: Vec<String>) -> impl Strategy<Value = PredictionRequest> {
    let key =
        if names.is_empty() { ident().boxed() } else { prop_oneof![proptest::sample::select(names), ident()].boxed() };
    proptest::collection::btree_map(key, request_value(), 0..8)
        .prop_map(|values: BTreeMap<String, RequestValue>| PredictionRequest { values })
}
