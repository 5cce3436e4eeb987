// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use voxserve_core::protocol::{FieldData, PredictionResponse, ProtocolError, ResponseField};
use voxserve_core::volume::encode_mha;

use crate::ClientError;

/// `<field name>.<ext>`: `.mha` for volumes, `.txt` for text and `.json` for
/// measures and point sets. Names that could escape the output directory
/// are refused.
pub fn output_file_name(field: &ResponseField) -> Result<String, ProtocolError> {
    let name = &field.name;
    let safe = !name.is_empty()
        && name != "."
        && name != ".."
        && !name.chars().any(|c| matches!(c, '/' | '\\' | '\0') || c.is_control());
    if !safe {
        return Err(ProtocolError::Invariant(format!("field name {name:?} is not a usable file name")));
    }
    let ext = match field.data {
        FieldData::LabelVolume(_) | FieldData::ImageVolume(_) => "mha",
        FieldData::PlainText(_) => "txt",
        FieldData::ScalarMeasure { .. } | FieldData::PointSet(_) => "json",
    };
    Ok(format!("{name}.{ext}"))
}

fn contents(field: &ResponseField) -> Vec<u8> {
    match &field.data {
        FieldData::LabelVolume(v) | FieldData::ImageVolume(v) => encode_mha(v),
        FieldData::PlainText(s) => s.clone().into_bytes(),
        FieldData::ScalarMeasure { value, unit } => {
            serde_json::to_vec_pretty(&serde_json::json!({ "value": value, "unit": unit })).expect("measure serializes")
        }
        FieldData::PointSet(points) => serde_json::to_vec_pretty(points).expect("points serialize"),
    }
}

/// Writes one file per response field into `dir`, creating it if needed.
pub fn save_outputs(response: &PredictionResponse, dir: &Path) -> Result<Vec<PathBuf>, ClientError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ClientError::Io { path, source }
    };
    let mut names = BTreeSet::new();
    let mut planned = Vec::with_capacity(response.fields.len());
    for field in &response.fields {
        let file = output_file_name(field)?;
        if !names.insert(file.clone()) {
            return Err(ProtocolError::Invariant(format!("duplicate response field {:?}", field.name)).into());
        }
        planned.push((dir.join(file), field));
    }
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::with_capacity(planned.len());
    for (path, field) in planned {
        std::fs::write(&path, contents(field)).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}
