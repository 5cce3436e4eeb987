// SPDX-License-Identifier: Apache-2.0

//! Text-safe volume payloads: standard base64 (with padding) of the MHA bytes.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;

use super::{decode_mha, encode_mha, VolumeError, VolumeGrid};

pub fn encode_volume_payload(vol: &VolumeGrid) -> String {
    STANDARD.encode(encode_mha(vol))
}

pub fn decode_volume_payload(payload: &str) -> Result<VolumeGrid, VolumeError> {
    let bytes = STANDARD.decode(payload.trim()).map_err(|e| VolumeError::Payload(format!("base64: {e}")))?;
    decode_mha(&bytes).map_err(|e| VolumeError::Payload(format!("embedded image: {e}")))
}
