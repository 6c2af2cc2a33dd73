use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LstmError, LstmModel, TrainConfig};

pub const MODEL_MAGIC: [u8; 4] = *b"SPLM";
pub const MODEL_VERSION: u32 = 1;

/// A shot named by its video and first frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShotRef {
    pub video_id: String,
    pub start_frame: u32,
}

/// JSON trailer of a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub config: TrainConfig,
    pub seed: u64,
    pub cycle: usize,
    pub initial_loss: f64,
    pub loss_trace: Vec<f64>,
    /// Divisor applied to elapsed minutes; absent when time was not appended.
    pub time_scale: Option<f64>,
    #[serde(default)]
    pub stride: Option<u32>,
    /// Shots held out from this model's training.
    #[serde(default)]
    pub test_shots: Vec<ShotRef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: LstmModel,
    pub meta: ModelMeta,
}

impl ModelFile {
    pub fn to_bytes(&self) -> Result<Vec<u8>, LstmError> {
        let m = &self.model;
        let mut out = Vec::with_capacity(16 + 8 * m.num_params());
        out.extend_from_slice(&MODEL_MAGIC);
        for v in [MODEL_VERSION, m.input_dim() as u32, m.hidden() as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for t in m.tensors() {
            for v in t {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(serde_json::to_string(&self.meta)?.as_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LstmError> {
        if bytes.len() < 4 {
            return Err(LstmError::Truncated);
        }
        if bytes[..4] != MODEL_MAGIC {
            return Err(LstmError::BadMagic);
        }
        let word = |i: usize| -> Result<u32, LstmError> {
            let b = bytes.get(4 + 4 * i..8 + 4 * i).ok_or(LstmError::Truncated)?;
            Ok(u32::from_le_bytes(b.try_into().expect("four bytes")))
        };
        let version = word(0)?;
        if version != MODEL_VERSION {
            return Err(LstmError::VersionMismatch(version));
        }
        let (d, h) = (word(1)? as usize, word(2)? as usize);
        let mut model = LstmModel::zeros(d, h);
        let mut pos = 16;
        for t in model.tensors_mut() {
            let end = pos + 8 * t.len();
            let raw = bytes.get(pos..end).ok_or(LstmError::Truncated)?;
            for (v, chunk) in t.iter_mut().zip(raw.chunks_exact(8)) {
                *v = f64::from_le_bytes(chunk.try_into().expect("eight bytes"));
            }
            pos = end;
        }
        let meta = serde_json::from_slice(&bytes[pos..])?;
        Ok(ModelFile { model, meta })
    }
}

pub fn write_model(file: &ModelFile, path: &Path) -> Result<(), LstmError> {
    let bytes = file.to_bytes()?;
    std::fs::write(path, bytes).map_err(|source| LstmError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_model(path: &Path) -> Result<ModelFile, LstmError> {
    let bytes = std::fs::read(path).map_err(|source| LstmError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ModelFile::from_bytes(&bytes)
}
