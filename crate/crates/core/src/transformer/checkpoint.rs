//! Checkpoints are two files: `<stem>.json`, a manifest with the model config
//! and one entry per tensor, and `<stem>.bin`, the tensors' `f64` values
//! concatenated in little-endian byte order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ParamRole, Transformer, TransformerConfig, TransformerError};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub role: ParamRole,
    pub shape: Vec<usize>,
    /// Byte offset into the blob.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub config: TransformerConfig,
    pub dtype: String,
    pub byte_order: String,
    pub blob: String,
    pub tensors: Vec<TensorEntry>,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("json"), stem.with_extension("bin"))
}

/// Write `<stem>.json` and `<stem>.bin`; returns the manifest.
pub fn save_checkpoint(model: &Transformer, stem: &Path) -> Result<CheckpointManifest, TransformerError> {
    let (json_path, bin_path) = paths(stem);
    let mut blob = Vec::new();
    let mut tensors = Vec::new();
    for p in model.params() {
        tensors.push(TensorEntry {
            name: p.name.clone(),
            role: p.role,
            shape: p.value.shape().to_vec(),
            offset: blob.len(),
        });
        for v in p.value.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let manifest = CheckpointManifest {
        config: model.config().clone(),
        dtype: "f64".into(),
        byte_order: "little".into(),
        blob: bin_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        tensors,
    };
    if let Some(dir) = json_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&bin_path, &blob)?;
    fs::write(&json_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn load_checkpoint(stem: &Path) -> Result<Transformer, TransformerError> {
    let (json_path, bin_path) = paths(stem);
    let manifest: CheckpointManifest = serde_json::from_str(&fs::read_to_string(json_path)?)?;
    if manifest.dtype != "f64" || manifest.byte_order != "little" {
        return Err(TransformerError::Checkpoint(format!(
            "unsupported encoding {} / {}",
            manifest.dtype, manifest.byte_order
        )));
    }
    let blob = fs::read(bin_path)?;
    let mut named = Vec::with_capacity(manifest.tensors.len());
    for e in &manifest.tensors {
        let n: usize = e.shape.iter().product();
        let bytes = blob.get(e.offset..e.offset + 8 * n).ok_or_else(|| {
            TransformerError::Checkpoint(format!("blob too short for `{}`", e.name))
        })?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        named.push((e.name.clone(), Tensor::new(e.shape.clone(), data)?));
    }
    Transformer::from_params(manifest.config, named)
}
