// SPDX-License-Identifier: Apache-2.0

//! Core building blocks for serving volumetric image analysis over HTTP.
//!
//! * [`protocol`] holds every wire-visible shape shared by endpoints, the
//!   registry and clients, with its JSON codec and request validation.
//! * [`volume`] holds the voxel lattice type, the MetaImage and payload
//!   codecs, and the deterministic transforms used by pipelines.
//! * [`pipeline`] composes pre-processing, a pluggable [`Predictor`] and
//!   post-processing into a timed three-phase unit.
//!
//! Volume math is generic over the voxel scalar (see [`scalar`]); the
//! concrete aliases below are what the wire formats carry.

pub mod pipeline;
pub mod protocol;
pub mod scalar;
pub mod synth;
#[cfg(feature = "testing")]
pub mod testing;
pub mod volume;

pub use pipeline::{PhaseTiming, Pipeline, Predictor};
pub use protocol::{InterfaceDescription, InterfaceElement, PredictionRequest, PredictionResponse};
pub use volume::{Volume, VolumeError, VolumeGrid};

/// Intensity volume as carried by `MET_FLOAT` images.
pub type FloatVolume = Volume<f32>;
/// Label volume as carried by `MET_UCHAR` images (0 = background).
pub type LabelVolume = Volume<u8>;
/// Double-precision volume, used for reference computations.
pub type F64Volume = Volume<f64>;
