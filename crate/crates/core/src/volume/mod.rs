// SPDX-License-Identifier: Apache-2.0

//! Voxel lattices with physical geometry, their codecs, and transforms.
//!
//! Voxels are stored flat with x varying fastest, the MetaImage ordering,
//! so the flat index of `(x, y, z)` is `x + nx * (y + ny * z)`.

mod components;
mod mha;
mod ops;
mod payload;
mod resample;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Voxel;

pub use components::largest_connected_component;
pub use mha::{decode_mha, encode_mha, MhaError};
pub use ops::{binarize, dice, otsu_threshold, znormalize, OTSU_BINS};
pub use payload::{decode_volume_payload, encode_volume_payload};
pub use resample::{resample_nearest, resample_to_shape, resample_trilinear};

#[derive(Debug, Error)]
pub enum VolumeError {
    #[error(transparent)]
    Mha(#[from] MhaError),
    #[error("invalid volume payload: {0}")]
    Payload(String),
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: [usize; 3], right: [usize; 3] },
    #[error("expected a {expected} volume, got {found}")]
    WrongKind { expected: ScalarKind, found: ScalarKind },
    #[error("invalid geometry: {0}")]
    Geometry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Float32,
    Uint8,
}

impl std::fmt::Display for ScalarKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScalarKind::Float32 => "float32",
            ScalarKind::Uint8 => "uint8",
        })
    }
}

/// Physical placement of a lattice: voxel pitch and the centre of voxel 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub dims: [usize; 3],
    pub spacing_mm: [f64; 3],
    pub origin_mm: [f64; 3],
}

impl Geometry {
    pub fn new(dims: [usize; 3], spacing_mm: [f64; 3], origin_mm: [f64; 3]) -> Result<Self, VolumeError> {
        if dims.contains(&0) {
            return Err(VolumeError::Geometry(format!("dims must be positive, got {dims:?}")));
        }
        if spacing_mm.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(VolumeError::Geometry(format!("spacing must be positive and finite, got {spacing_mm:?}")));
        }
        if origin_mm.iter().any(|o| !o.is_finite()) {
            return Err(VolumeError::Geometry(format!("origin must be finite, got {origin_mm:?}")));
        }
        Ok(Self { dims, spacing_mm, origin_mm })
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Physical position of the centre of voxel `(x, y, z)`.
    pub fn physical_point(&self, idx: [usize; 3]) -> [f64; 3] {
        std::array::from_fn(|a| self.origin_mm[a] + idx[a] as f64 * self.spacing_mm[a])
    }
}

/// A 3D lattice of voxels of type `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    geometry: Geometry,
    voxels: Vec<T>,
}

impl<T> Volume<T> {
    pub fn from_parts(geometry: Geometry, voxels: Vec<T>) -> Result<Self, VolumeError> {
        if voxels.len() != geometry.len() {
            return Err(VolumeError::Geometry(format!(
                "{} voxels supplied for dims {:?}",
                voxels.len(),
                geometry.dims
            )));
        }
        Ok(Self { geometry, voxels })
    }

    /// Unit spacing, zero origin.
    pub fn from_vec(dims: [usize; 3], voxels: Vec<T>) -> Result<Self, VolumeError> {
        Self::from_parts(Geometry::new(dims, [1.0; 3], [0.0; 3])?, voxels)
    }

    pub fn from_fn(geometry: Geometry, mut f: impl FnMut([usize; 3]) -> T) -> Self {
        let [nx, ny, nz] = geometry.dims;
        let mut voxels = Vec::with_capacity(geometry.len());
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    voxels.push(f([x, y, z]));
                }
            }
        }
        Self { geometry, voxels }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    pub fn voxels(&self) -> &[T] {
        &self.voxels
    }

    pub fn into_voxels(self) -> Vec<T> {
        self.voxels
    }

    #[inline]
    pub fn index(&self, [x, y, z]: [usize; 3]) -> usize {
        let [nx, ny, _] = self.geometry.dims;
        x + nx * (y + ny * z)
    }

    #[inline]
    pub fn get(&self, idx: [usize; 3]) -> &T {
        &self.voxels[self.index(idx)]
    }

    /// Same geometry, new voxel values.
    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Volume<U> {
        Volume { geometry: self.geometry, voxels: self.voxels.iter().map(f).collect() }
    }

    /// Replace spacing and origin, keeping dims and voxels.
    pub fn with_frame(mut self, spacing_mm: [f64; 3], origin_mm: [f64; 3]) -> Result<Self, VolumeError> {
        self.geometry = Geometry::new(self.geometry.dims, spacing_mm, origin_mm)?;
        Ok(self)
    }
}

/// A volume as exchanged over the wire: one of the two supported scalar kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum VolumeGrid {
    Float32(Volume<f32>),
    Uint8(Volume<u8>),
}

impl VolumeGrid {
    pub fn scalar_kind(&self) -> ScalarKind {
        match self {
            VolumeGrid::Float32(_) => ScalarKind::Float32,
            VolumeGrid::Uint8(_) => ScalarKind::Uint8,
        }
    }

    pub fn geometry(&self) -> &Geometry {
        match self {
            VolumeGrid::Float32(v) => v.geometry(),
            VolumeGrid::Uint8(v) => v.geometry(),
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry().dims
    }

    pub fn as_float(&self) -> Result<&Volume<f32>, VolumeError> {
        match self {
            VolumeGrid::Float32(v) => Ok(v),
            other => Err(VolumeError::WrongKind { expected: ScalarKind::Float32, found: other.scalar_kind() }),
        }
    }

    pub fn as_label(&self) -> Result<&Volume<u8>, VolumeError> {
        match self {
            VolumeGrid::Uint8(v) => Ok(v),
            other => Err(VolumeError::WrongKind { expected: ScalarKind::Uint8, found: other.scalar_kind() }),
        }
    }

    /// Intensities as `f32`, converting label volumes.
    pub fn to_float(&self) -> Volume<f32> {
        match self {
            VolumeGrid::Float32(v) => v.clone(),
            VolumeGrid::Uint8(v) => v.map(|&x| f32::from(x)),
        }
    }

    pub fn with_frame(self, spacing_mm: [f64; 3], origin_mm: [f64; 3]) -> Result<Self, VolumeError> {
        Ok(match self {
            VolumeGrid::Float32(v) => VolumeGrid::Float32(v.with_frame(spacing_mm, origin_mm)?),
            VolumeGrid::Uint8(v) => VolumeGrid::Uint8(v.with_frame(spacing_mm, origin_mm)?),
        })
    }

    pub fn voxel_count(&self) -> usize {
        self.geometry().len()
    }
}

impl From<Volume<f32>> for VolumeGrid {
    fn from(v: Volume<f32>) -> Self {
        VolumeGrid::Float32(v)
    }
}

impl From<Volume<u8>> for VolumeGrid {
    fn from(v: Volume<u8>) -> Self {
        VolumeGrid::Uint8(v)
    }
}

/// Byte length of the raw voxel block for `dims` of element type `T`.
pub(crate) fn raw_len<T: Voxel>(dims: [usize; 3]) -> Option<usize> {
    dims.iter().try_fold(T::WIDTH, |acc, &d| acc.checked_mul(d))
}
