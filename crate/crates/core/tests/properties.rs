// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use voxserve_core::protocol::{
    decode_interface, decode_response, encode_interface, encode_response, validate_request, AnnounceMessage,
};
use voxserve_core::testing::{oracles, strategies};
use voxserve_core::volume::{
    decode_mha, decode_volume_payload, dice, encode_mha, encode_volume_payload, largest_connected_component,
    otsu_threshold, resample_trilinear, Geometry,
};
use voxserve_core::{F64Volume, Volume, VolumeGrid};

fn bits_equal(a: &VolumeGrid, b: &VolumeGrid) -> bool {
    match (a, b) {
        (VolumeGrid::Float32(x), VolumeGrid::Float32(y)) => {
            x.geometry() == y.geometry() && x.voxels().iter().zip(y.voxels()).all(|(p, q)| p.to_bits() == q.to_bits())
        }
        (VolumeGrid::Uint8(x), VolumeGrid::Uint8(y)) => x == y,
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mha_roundtrip(v in strategies::volume_grid(6)) {
        prop_assert!(bits_equal(&decode_mha(&encode_mha(&v)).unwrap(), &v));
    }

    #[test]
    fn payload_roundtrip(v in strategies::volume_grid(6)) {
        prop_assert!(bits_equal(&decode_volume_payload(&encode_volume_payload(&v)).unwrap(), &v));
    }

    #[test]
    fn interface_roundtrip(d in strategies::interface()) {
        prop_assert_eq!(decode_interface(&encode_interface(&d)).unwrap(), d);
    }

    #[test]
    fn response_roundtrip(r in strategies::response()) {
        prop_assert_eq!(decode_response(&encode_response(&r)).unwrap(), r);
    }

    #[test]
    fn announce_roundtrip(m in strategies::announce()) {
        prop_assert!(m.check().is_ok(), "{:?}", m);
        prop_assert_eq!(AnnounceMessage::decode(&m.encode()).unwrap(), m);
    }

    #[test]
    fn validate_is_total(
        (d, req) in strategies::interface().prop_flat_map(|d| {
            let names = d.elements().iter().map(|e| e.name.clone()).collect();
            (Just(d), strategies::value_map(names))
        })
    ) {
        match validate_request(&d, &req) {
            Ok(()) => {
                for e in d.elements().iter().filter(|e| e.required) {
                    prop_assert!(req.values.contains_key(&e.name));
                }
            }
            Err(v) => prop_assert!(!v.is_empty()),
        }
    }

    #[test]
    fn largest_component_matches_union_find(v in strategies::binary_volume(16)) {
        let out = largest_connected_component(&v);
        prop_assert_eq!(&out, &oracles::largest_component(&v));
        // subset of the input, and exactly one component unless empty
        prop_assert!(out.voxels().iter().zip(v.voxels()).all(|(&o, &i)| o <= i));
        let expected = usize::from(v.voxels().iter().any(|&x| x != 0));
        prop_assert_eq!(oracles::components_6(&out).len(), expected);
    }

    #[test]
    fn otsu_matches_exhaustive_scan(v in strategies::few_valued_volume(8, 8)) {
        match oracles::otsu_exhaustive(&v) {
            None => prop_assert!(otsu_threshold(&v).is_err()),
            Some((_, t)) => prop_assert_eq!(otsu_threshold(&v).unwrap(), t),
        }
    }

    #[test]
    fn dice_symmetric_and_bounded(a in strategies::binary_volume(5), seed in any::<u64>()) {
        let b = a.map(|&x| x ^ u8::from(seed % 3 == 0));
        let ab = dice(&a, &b).unwrap();
        prop_assert_eq!(ab, dice(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn trilinear_matches_corner_weights(
        v in strategies::float_volume(5).prop_map(|v| v.map(|&x| f64::from(x.clamp(-1e6, 1e6)))),
        target in [1usize..9, 1usize..9, 1usize..9],
    ) {
        let out = resample_trilinear(&v, target).unwrap();
        let expected = oracles::trilinear(&v, target);
        let scale = v.voxels().iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for (a, b) in out.voxels().iter().zip(&expected) {
            prop_assert!((a - b).abs() <= 1e-9 * scale, "{} vs {}", a, b);
        }
    }

    #[test]
    fn trilinear_no_overshoot_on_monotone_rows(
        rows in proptest::collection::vec(-100.0f64..100.0, 2..12),
        n_out in 1usize..30,
    ) {
        let mut sorted = rows.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let v: F64Volume = Volume::from_vec([n, 1, 1], sorted.clone()).unwrap();
        let out = resample_trilinear(&v, [n_out, 1, 1]).unwrap();
        prop_assert!(out.voxels().windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(out.voxels().iter().all(|&x| x >= sorted[0] && x <= sorted[n - 1]));
    }

    #[test]
    fn resample_preserves_constants_and_extent(
        c in -1e3f32..1e3,
        g in strategies::geometry(6),
        target in [1usize..10, 1usize..10, 1usize..10],
    ) {
        let v = Volume::from_fn(g, |_| c);
        let out = resample_trilinear(&v, target).unwrap();
        prop_assert!(out.voxels().iter().all(|&x| x == c));
        for a in 0..3 {
            let before = g.dims[a] as f64 * g.spacing_mm[a];
            let after = target[a] as f64 * out.geometry().spacing_mm[a];
            prop_assert!((before - after).abs() <= 1e-9 * before);
        }
    }
}

#[test]
fn degenerate_single_voxel_roundtrip() {
    let g = Geometry::new([1, 1, 1], [1.0; 3], [0.0; 3]).unwrap();
    for v in [VolumeGrid::from(Volume::from_fn(g, |_| -0.0f32)), VolumeGrid::from(Volume::from_fn(g, |_| 255u8))] {
        assert!(bits_equal(&decode_mha(&encode_mha(&v)).unwrap(), &v));
    }
}
