// SPDX-License-Identifier: Apache-2.0

//! Uncompressed single-file MetaImage (`.mha`) codec.
//!
//! Only 3D images with `ElementDataFile = LOCAL` and little-endian
//! `MET_FLOAT` or `MET_UCHAR` voxels are accepted.

use thiserror::Error;

use super::{raw_len, Geometry, Volume, VolumeGrid};
use crate::scalar::Voxel;

#[derive(Debug, Error, PartialEq)]
pub enum MhaError {
    #[error("header key {key}: {reason}")]
    Header { key: String, reason: String },
    #[error("header is missing required key {0}")]
    MissingKey(&'static str),
    #[error("header is not terminated by ElementDataFile")]
    Unterminated,
    #[error("voxel data truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{extra} trailing bytes after voxel data")]
    TrailingBytes { extra: usize },
}

fn header_err(key: &str, reason: impl Into<String>) -> MhaError {
    MhaError::Header { key: key.to_string(), reason: reason.into() }
}

fn write_header(out: &mut Vec<u8>, g: &Geometry, element_type: &str) {
    let triple = |v: [f64; 3]| format!("{} {} {}", v[0], v[1], v[2]);
    let [nx, ny, nz] = g.dims;
    let header = format!(
        "ObjectType = Image\n\
         NDims = 3\n\
         BinaryData = True\n\
         BinaryDataByteOrderMSB = False\n\
         CompressedData = False\n\
         Offset = {}\n\
         ElementSpacing = {}\n\
         DimSize = {nx} {ny} {nz}\n\
         ElementType = {element_type}\n\
         ElementDataFile = LOCAL\n",
        triple(g.origin_mm),
        triple(g.spacing_mm),
    );
    out.extend_from_slice(header.as_bytes());
}

fn encode_typed<T: Voxel>(v: &Volume<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(256 + v.voxels().len() * T::WIDTH);
    write_header(&mut out, v.geometry(), T::ELEMENT_TYPE);
    for &x in v.voxels() {
        x.write_le(&mut out);
    }
    out
}

pub fn encode_mha(vol: &VolumeGrid) -> Vec<u8> {
    match vol {
        VolumeGrid::Float32(v) => encode_typed(v),
        VolumeGrid::Uint8(v) => encode_typed(v),
    }
}

#[derive(Default)]
struct Header {
    ndims: Option<usize>,
    dims: Option<[usize; 3]>,
    spacing: Option<[f64; 3]>,
    offset: Option<[f64; 3]>,
    element_type: Option<String>,
}

fn parse_triple<T: std::str::FromStr>(key: &str, value: &str) -> Result<[T; 3], MhaError> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(header_err(key, format!("expected 3 values, got {}", parts.len())));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(p.parse::<T>().map_err(|_| header_err(key, format!("cannot parse {p:?}")))?);
    }
    out.try_into().map_err(|_| header_err(key, "expected 3 values"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, MhaError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(header_err(key, format!("expected True or False, got {value:?}"))),
    }
}

/// Splits the ASCII header from the raw data, returning the parsed header
/// and the byte offset at which voxel data starts.
fn parse_header(bytes: &[u8]) -> Result<(Header, usize), MhaError> {
    let mut header = Header::default();
    let mut pos = 0;
    while pos < bytes.len() {
        let end = bytes[pos..].iter().position(|&b| b == b'\n').map(|i| pos + i);
        let line_end = end.unwrap_or(bytes.len());
        let line = std::str::from_utf8(&bytes[pos..line_end])
            .map_err(|_| header_err("<header>", "non-UTF-8 header line"))?
            .trim_end_matches('\r');
        pos = end.map_or(bytes.len(), |e| e + 1);
        if line.trim().is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| header_err(line.trim(), "expected `Key = Value`"))?;
        match key {
            "NDims" => {
                let n: usize = value.parse().map_err(|_| header_err(key, format!("cannot parse {value:?}")))?;
                if n != 3 {
                    return Err(header_err(key, format!("only 3D images are supported, got {n}")));
                }
                header.ndims = Some(n);
            }
            "DimSize" => {
                let d: [usize; 3] = parse_triple(key, value)?;
                if d.contains(&0) {
                    return Err(header_err(key, "dimensions must be positive"));
                }
                header.dims = Some(d);
            }
            "ElementSpacing" | "ElementSize" => {
                let s: [f64; 3] = parse_triple(key, value)?;
                if s.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                    return Err(header_err(key, "spacing must be positive"));
                }
                // ElementSpacing wins when both are present.
                if key == "ElementSpacing" || header.spacing.is_none() {
                    header.spacing = Some(s);
                }
            }
            "Offset" | "Origin" | "Position" => {
                let o: [f64; 3] = parse_triple(key, value)?;
                if o.iter().any(|x| !x.is_finite()) {
                    return Err(header_err(key, "offset must be finite"));
                }
                header.offset = Some(o);
            }
            "ElementType" => header.element_type = Some(value.to_string()),
            "CompressedData" => {
                if parse_bool(key, value)? {
                    return Err(header_err(key, "compressed data is not supported"));
                }
            }
            "BinaryDataByteOrderMSB" | "ElementByteOrderMSB" => {
                if parse_bool(key, value)? {
                    return Err(header_err(key, "big-endian data is not supported"));
                }
            }
            "BinaryData" => {
                if !parse_bool(key, value)? {
                    return Err(header_err(key, "ASCII voxel data is not supported"));
                }
            }
            "ElementNumberOfChannels" => {
                if value != "1" {
                    return Err(header_err(key, "only single-channel images are supported"));
                }
            }
            "ElementDataFile" => {
                if value != "LOCAL" {
                    return Err(header_err(key, format!("only LOCAL data is supported, got {value:?}")));
                }
                return Ok((header, pos));
            }
            _ => {}
        }
    }
    Err(MhaError::Unterminated)
}

fn decode_typed<T: Voxel>(geometry: Geometry, raw: &[u8]) -> Result<Volume<T>, MhaError> {
    let expected = raw_len::<T>(geometry.dims).ok_or_else(|| header_err("DimSize", "image too large"))?;
    if raw.len() < expected {
        return Err(MhaError::Truncated { expected, found: raw.len() });
    }
    if raw.len() > expected {
        return Err(MhaError::TrailingBytes { extra: raw.len() - expected });
    }
    let voxels = raw.chunks_exact(T::WIDTH).map(T::read_le).collect();
    Ok(Volume::from_parts(geometry, voxels).expect("length checked above"))
}

pub fn decode_mha(bytes: &[u8]) -> Result<VolumeGrid, MhaError> {
    let (header, data_start) = parse_header(bytes)?;
    header.ndims.ok_or(MhaError::MissingKey("NDims"))?;
    let dims = header.dims.ok_or(MhaError::MissingKey("DimSize"))?;
    let element_type = header.element_type.ok_or(MhaError::MissingKey("ElementType"))?;
    let geometry = Geometry::new(dims, header.spacing.unwrap_or([1.0; 3]), header.offset.unwrap_or([0.0; 3]))
        .map_err(|e| header_err("DimSize", e.to_string()))?;
    let raw = &bytes[data_start..];
    match element_type.as_str() {
        "MET_FLOAT" => Ok(VolumeGrid::Float32(decode_typed(geometry, raw)?)),
        "MET_UCHAR" => Ok(VolumeGrid::Uint8(decode_typed(geometry, raw)?)),
        other => Err(header_err("ElementType", format!("unsupported element type {other:?}"))),
    }
}
