// SPDX-License-Identifier: Apache-2.0

//! Scalar traits for voxel storage and volume arithmetic.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A voxel element type with a fixed little-endian byte layout.
pub trait Voxel: Copy + PartialEq + Debug + Default + Send + Sync + 'static {
    /// MetaImage `ElementType` name.
    const ELEMENT_TYPE: &'static str;
    /// Encoded width in bytes.
    const WIDTH: usize;

    fn read_le(bytes: &[u8]) -> Self;
    fn write_le(self, out: &mut Vec<u8>);
}

impl Voxel for f32 {
    const ELEMENT_TYPE: &'static str = "MET_FLOAT";
    const WIDTH: usize = 4;

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]])
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
}

impl Voxel for u8 {
    const ELEMENT_TYPE: &'static str = "MET_UCHAR";
    const WIDTH: usize = 1;

    fn read_le(bytes: &[u8]) -> Self {
        bytes[0]
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.push(self);
    }
}

/// Floating point voxel scalar used by the intensity transforms.
///
/// Statistics are always accumulated in `f64` regardless of `Self`.
pub trait Real: Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }
}

impl Real for f32 {}
impl Real for f64 {}
