use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelError, ModelParams};
use crate::neuro::Array2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub name: String,
    pub shape: [usize; 2],
    /// Byte offset into the blob.
    pub offset: usize,
    /// Number of `f32` values.
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub config: ModelConfig,
    pub dtype: String,
    /// Blob file name, relative to the manifest.
    pub blob: String,
    pub params: Vec<CheckpointEntry>,
}

/// `model.json` → `model.bin`.
pub fn blob_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

/// Writes the manifest to `path` and every parameter as little-endian
/// `f32` to the sibling blob.
pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<(), ModelError> {
    let blob = blob_path(path);
    let mut bytes = Vec::with_capacity(params.parameter_count() * 4);
    let mut entries = Vec::new();
    for (name, a) in params.arrays() {
        entries.push(CheckpointEntry {
            name,
            shape: [a.rows(), a.cols()],
            offset: bytes.len(),
            len: a.len(),
        });
        bytes.extend(a.data().iter().flat_map(|&v| (v as f32).to_le_bytes()));
    }
    let manifest = CheckpointManifest {
        config: params.config.clone(),
        dtype: "f32".into(),
        blob: blob
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        params: entries,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| ModelError::Format(e.to_string()))?;
    fs::write(path, json).map_err(|e| ModelError::io(path, e))?;
    fs::write(&blob, bytes).map_err(|e| ModelError::io(&blob, e))
}

/// Reads a checkpoint, checking names, shapes and offsets against the
/// layout implied by the stored config.
pub fn load_checkpoint(path: &Path) -> Result<ModelParams, ModelError> {
    let text = fs::read_to_string(path).map_err(|e| ModelError::io(path, e))?;
    let m: CheckpointManifest = serde_json::from_str(&text).map_err(|e| ModelError::Format(e.to_string()))?;
    if m.dtype != "f32" {
        return Err(ModelError::Format(format!("unsupported dtype {}", m.dtype)));
    }
    let layout = ModelParams::zeros(&m.config)?;
    let expected = layout.arrays();
    if expected.len() != m.params.len() {
        return Err(ModelError::ParamCount {
            expected: expected.len(),
            got: m.params.len(),
        });
    }
    let blob = path.with_file_name(&m.blob);
    let bytes = fs::read(&blob).map_err(|e| ModelError::io(&blob, e))?;
    let mut arrays = Vec::with_capacity(expected.len());
    for ((name, want), entry) in expected.iter().zip(&m.params) {
        if *name != entry.name {
            return Err(ModelError::Format(format!("expected parameter {name}, found {}", entry.name)));
        }
        let shape = (entry.shape[0], entry.shape[1]);
        if shape != want.shape() || entry.len != want.len() {
            return Err(ModelError::ParamShape {
                name: name.clone(),
                expected: want.shape(),
                got: shape,
            });
        }
        let end = entry.offset + entry.len * 4;
        let raw = bytes
            .get(entry.offset..end)
            .ok_or_else(|| ModelError::Format(format!("{name} lies outside the blob")))?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        arrays.push(Array2::from_vec(shape.0, shape.1, data)?);
    }
    ModelParams::from_arrays(&m.config, arrays)
}
