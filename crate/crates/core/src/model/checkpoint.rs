//! Checkpoint directory layout:
//!
//! ```text
//! <dir>/manifest.json   format version, model config, tensor table, phase metadata
//! <dir>/params.bin      little-endian f32, row-major, concatenated in table order
//! <dir>/optimizer.bin   optional: first moments then second moments, same order
//! ```
//!
//! Random state is not stored as generator bytes: every stream is derived
//! from `rng_seed` plus the (phase, epoch, batch) position recorded here.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::param_shapes;
use super::{EncoderState, ModelConfig, ModelError, Tensor};
use crate::Scalar;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const PARAMS: &str = "params.bin";
const OPTIMIZER: &str = "optimizer.bin";

/// Where in the two-phase schedule a checkpoint was taken.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseMeta {
    /// 1 or 2.
    pub phase: u32,
    pub completed_epochs: u32,
    /// Batches already consumed in the current (incomplete) epoch.
    pub batch_in_epoch: u64,
    /// Optimizer steps since the start of phase 1.
    pub global_step: u64,
    pub rng_seed: u64,
}

/// Adam moments stored alongside the parameters for mid-phase resume.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<T> {
    pub m: EncoderState<T>,
    pub v: EncoderState<T>,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub state: EncoderState<T>,
    pub meta: PhaseMeta,
    pub moments: Option<Moments<T>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    dtype: String,
    shape: Vec<usize>,
    /// Byte offset into `params.bin`.
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizerEntry {
    file: String,
    step: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format_version: u32,
    config: ModelConfig,
    tensors: Vec<TensorEntry>,
    meta: PhaseMeta,
    optimizer: Option<OptimizerEntry>,
}

fn io_error(path: &Path, source: std::io::Error) -> ModelError {
    ModelError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn encode<T: Scalar>(state: &EncoderState<T>, out: &mut Vec<u8>) {
    for t in state.tensors() {
        for &x in t.data() {
            out.extend_from_slice(&x.as_f32().to_le_bytes());
        }
    }
}

fn decode<T: Scalar>(bytes: &[u8], state: &mut EncoderState<T>) {
    let mut chunks = bytes.chunks_exact(4);
    for t in state.tensors_mut() {
        for x in t.data_mut() {
            let c = chunks.next().expect("length checked by caller");
            *x = <T as Scalar>::from_f32(f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
        }
    }
}

pub fn save_checkpoint<T: Scalar>(checkpoint: &Checkpoint<T>, dir: &Path) -> Result<(), ModelError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let config = &checkpoint.state.config;
    let mut offset = 0;
    let tensors = param_shapes(config)
        .into_iter()
        .map(|(name, shape)| {
            let entry = TensorEntry {
                name,
                dtype: "f32".into(),
                offset,
                shape,
            };
            offset += entry.shape.iter().product::<usize>() * 4;
            entry
        })
        .collect();
    let manifest = Manifest {
        format_version: CHECKPOINT_FORMAT_VERSION,
        config: config.clone(),
        tensors,
        meta: checkpoint.meta.clone(),
        optimizer: checkpoint.moments.as_ref().map(|m| OptimizerEntry {
            file: OPTIMIZER.into(),
            step: m.step,
        }),
    };

    let mut params = Vec::with_capacity(offset);
    encode(&checkpoint.state, &mut params);
    let path = dir.join(PARAMS);
    fs::write(&path, &params).map_err(|e| io_error(&path, e))?;

    let opt_path = dir.join(OPTIMIZER);
    if let Some(moments) = &checkpoint.moments {
        let mut bytes = Vec::with_capacity(2 * offset);
        encode(&moments.m, &mut bytes);
        encode(&moments.v, &mut bytes);
        fs::write(&opt_path, &bytes).map_err(|e| io_error(&opt_path, e))?;
    } else if opt_path.exists() {
        fs::remove_file(&opt_path).map_err(|e| io_error(&opt_path, e))?;
    }

    let mut json =
        serde_json::to_string_pretty(&manifest).map_err(|e| ModelError::Manifest(e.to_string()))?;
    json.push('\n');
    let path = dir.join(MANIFEST);
    fs::write(&path, json).map_err(|e| io_error(&path, e))
}

fn read_exact_len(path: &Path, expected: usize) -> Result<Vec<u8>, ModelError> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    if bytes.len() != expected {
        return Err(ModelError::Truncated {
            file: path.display().to_string(),
            expected,
            found: bytes.len(),
        });
    }
    Ok(bytes)
}

/// Loads and validates a checkpoint directory.
pub fn load_checkpoint<T: Scalar>(dir: &Path) -> Result<Checkpoint<T>, ModelError> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
    let raw: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| ModelError::Manifest(e.to_string()))?;
    let found = raw.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if found != CHECKPOINT_FORMAT_VERSION {
        return Err(ModelError::VersionMismatch {
            found,
            expected: CHECKPOINT_FORMAT_VERSION,
        });
    }
    let manifest: Manifest = serde_json::from_value(raw).map_err(|e| ModelError::Manifest(e.to_string()))?;
    manifest.config.validate()?;

    let expected = param_shapes(&manifest.config);
    if expected.len() != manifest.tensors.len() {
        return Err(ModelError::Manifest(format!(
            "expected {} tensors, manifest lists {}",
            expected.len(),
            manifest.tensors.len()
        )));
    }
    let mut offset = 0;
    for ((name, shape), entry) in expected.iter().zip(&manifest.tensors) {
        if entry.name != *name {
            return Err(ModelError::Manifest(format!(
                "expected tensor {name}, found {}",
                entry.name
            )));
        }
        if entry.shape != *shape {
            return Err(ModelError::ShapeMismatch {
                name: name.clone(),
                expected: shape.clone(),
                found: entry.shape.clone(),
            });
        }
        if entry.dtype != "f32" || entry.offset != offset {
            return Err(ModelError::Manifest(format!(
                "tensor {name}: bad dtype or offset"
            )));
        }
        offset += shape.iter().product::<usize>() * 4;
    }

    let bytes = read_exact_len(&dir.join(PARAMS), offset)?;
    let mut state = EncoderState::zeros(&manifest.config);
    decode(&bytes, &mut state);

    let moments = match &manifest.optimizer {
        None => None,
        Some(entry) => {
            let bytes = read_exact_len(&dir.join(&entry.file), 2 * offset)?;
            let mut m = EncoderState::zeros(&manifest.config);
            let mut v = EncoderState::zeros(&manifest.config);
            decode(&bytes[..offset], &mut m);
            decode(&bytes[offset..], &mut v);
            Some(Moments {
                m,
                v,
                step: entry.step,
            })
        }
    };
    Ok(Checkpoint {
        state,
        meta: manifest.meta,
        moments,
    })
}

impl<T: Scalar> Tensor<T> {
    /// Values rounded to the `f32` payload precision.
    pub fn to_f32_vec(&self) -> Vec<f32> {
        self.data().iter().map(|x| x.as_f32()).collect()
    }
}
