// SPDX-License-Identifier: Apache-2.0

//! Shape resampling with voxel-centre alignment.
//!
//! Output voxel `i` along an axis of `n_in -> n_out` samples the input at
//! continuous index `(i + 0.5) * n_in / n_out - 0.5`, so the physical extent
//! `dims * spacing` is preserved exactly and the lattices share their outer
//! boundary.

use super::{Geometry, Volume, VolumeError, VolumeGrid};
use crate::scalar::Real;

fn target_geometry(g: &Geometry, target: [usize; 3]) -> Result<Geometry, VolumeError> {
    let spacing: [f64; 3] = std::array::from_fn(|a| g.spacing_mm[a] * g.dims[a] as f64 / target[a].max(1) as f64);
    let origin: [f64; 3] = std::array::from_fn(|a| g.origin_mm[a] + 0.5 * (spacing[a] - g.spacing_mm[a]));
    Geometry::new(target, spacing, origin)
}

/// Per-axis sample positions in input index space, clamped to the lattice.
fn sample_positions(n_in: usize, n_out: usize) -> Vec<f64> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out).map(|i| ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_in - 1) as f64)).collect()
}

/// Linear interpolation that returns `a` exactly when `a == b` and never
/// leaves `[min(a, b), max(a, b)]`.
#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if a == b {
        return a;
    }
    (a + (b - a) * t).clamp(a.min(b), a.max(b))
}

pub fn resample_trilinear<T: Real>(vol: &Volume<T>, target: [usize; 3]) -> Result<Volume<T>, VolumeError> {
    if target == vol.dims() {
        return Ok(vol.clone());
    }
    let geometry = target_geometry(vol.geometry(), target)?;
    let dims = vol.dims();
    let axes: [Vec<(usize, usize, f64)>; 3] = std::array::from_fn(|a| {
        sample_positions(dims[a], target[a])
            .into_iter()
            .map(|p| {
                let i0 = p.floor() as usize;
                let i1 = (i0 + 1).min(dims[a] - 1);
                (i0, i1, p - i0 as f64)
            })
            .collect()
    });
    let at = |x: usize, y: usize, z: usize| vol.get([x, y, z]).to_f64_lossy();
    Ok(Volume::from_fn(geometry, |[x, y, z]| {
        let (x0, x1, tx) = axes[0][x];
        let (y0, y1, ty) = axes[1][y];
        let (z0, z1, tz) = axes[2][z];
        let c00 = lerp(at(x0, y0, z0), at(x1, y0, z0), tx);
        let c10 = lerp(at(x0, y1, z0), at(x1, y1, z0), tx);
        let c01 = lerp(at(x0, y0, z1), at(x1, y0, z1), tx);
        let c11 = lerp(at(x0, y1, z1), at(x1, y1, z1), tx);
        let c0 = lerp(c00, c10, ty);
        let c1 = lerp(c01, c11, ty);
        T::from_f64_lossy(lerp(c0, c1, tz))
    }))
}

pub fn resample_nearest<T: Copy>(vol: &Volume<T>, target: [usize; 3]) -> Result<Volume<T>, VolumeError> {
    if target == vol.dims() {
        return Ok(vol.clone());
    }
    let geometry = target_geometry(vol.geometry(), target)?;
    let dims = vol.dims();
    let axes: [Vec<usize>; 3] = std::array::from_fn(|a| {
        let scale = dims[a] as f64 / target[a] as f64;
        (0..target[a]).map(|i| (((i as f64 + 0.5) * scale).floor() as usize).min(dims[a] - 1)).collect()
    });
    Ok(Volume::from_fn(geometry, |[x, y, z]| *vol.get([axes[0][x], axes[1][y], axes[2][z]])))
}

/// Trilinear for intensity volumes, nearest-neighbour for label volumes.
pub fn resample_to_shape(vol: &VolumeGrid, target: [usize; 3]) -> Result<VolumeGrid, VolumeError> {
    Ok(match vol {
        VolumeGrid::Float32(v) => VolumeGrid::Float32(resample_trilinear(v, target)?),
        VolumeGrid::Uint8(v) => VolumeGrid::Uint8(resample_nearest(v, target)?),
    })
}
