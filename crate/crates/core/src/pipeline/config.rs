use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::dataset::{ShotConfig, DEFAULT_FPS};
use crate::features::{Backbone, ReceptiveFieldMode};
use crate::lstm::TrainConfig;
use crate::pooling::{DistanceMetric, PoolingMode, TimeScale};
use crate::saliency::LogGaborBankConfig;

/// Where per-frame descriptors come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProviderConfig {
    /// Deterministic stand-in with the backbone's output shape.
    Mock { seed: u64 },
    /// An ONNX export of the backbone. `output` overrides the layer name.
    Onnx {
        model: PathBuf,
        #[serde(default)]
        output: Option<String>,
    },
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig::Mock { seed: 0 }
    }
}

/// Every setting of a run. Defaults follow the best reported configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Holds `annotations/` and either `frames/` or `ground_truth.json`.
    pub dataset_root: PathBuf,
    /// Overrides `<dataset_root>/annotations`.
    pub annotations: Option<PathBuf>,
    /// A frame directory, or a synthetic ground-truth file rendered on demand.
    pub frames: Option<PathBuf>,
    pub fps: u32,
    pub backbone: Backbone,
    pub receptive_field: ReceptiveFieldMode,
    pub provider: ProviderConfig,
    pub saliency: LogGaborBankConfig,
    pub pooling: PoolingMode,
    pub metric: DistanceMetric,
    pub with_time: bool,
    pub time_scale: TimeScale,
    pub leave_one_video_out: bool,
    /// Frame stride of feature extraction; pooling uses every extracted frame.
    pub pooling_stride: u32,
    /// Frame stride of the LSTM input sequences.
    pub lstm_stride: u32,
    pub shots: ShotConfig,
    pub train: TrainConfig,
    /// Width of the overlap-profile bins, in minutes.
    pub overlap_bin_minutes: f64,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset_root: PathBuf::from("data"),
            annotations: None,
            frames: None,
            fps: DEFAULT_FPS,
            backbone: Backbone::Resnet101,
            receptive_field: ReceptiveFieldMode::SalientPatch,
            provider: ProviderConfig::default(),
            saliency: LogGaborBankConfig::default(),
            pooling: PoolingMode::Max,
            metric: DistanceMetric::Cosine,
            with_time: true,
            time_scale: TimeScale::Auto,
            leave_one_video_out: false,
            pooling_stride: 1,
            lstm_stride: 25,
            shots: ShotConfig::default(),
            train: TrainConfig::default(),
            overlap_bin_minutes: 1.0,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.fps == 0 {
            return bad("fps must be positive".into());
        }
        if self.pooling_stride == 0 || self.lstm_stride == 0 {
            return bad("strides must be positive".into());
        }
        if self.lstm_stride % self.pooling_stride != 0 {
            return bad(format!(
                "lstm_stride {} must be a multiple of pooling_stride {}",
                self.lstm_stride, self.pooling_stride
            ));
        }
        if !(self.overlap_bin_minutes > 0.0) {
            return bad("overlap_bin_minutes must be positive".into());
        }
        self.saliency.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.train.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn annotations_dir(&self) -> PathBuf {
        self.annotations.clone().unwrap_or_else(|| self.dataset_root.join("annotations"))
    }

    /// Explicit `frames`, else `frames/` under the root, else the root's
    /// synthetic ground truth.
    pub fn frames_path(&self) -> PathBuf {
        if let Some(f) = &self.frames {
            return f.clone();
        }
        let dir = self.dataset_root.join("frames");
        let truth = self.dataset_root.join("ground_truth.json");
        if !dir.exists() && truth.exists() {
            truth
        } else {
            dir
        }
    }

    /// SHA-256 of the serialized config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config is always serializable");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn seed(&self) -> u64 {
        self.train.seed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_best_setup() {
        let c = PipelineConfig::default();
        assert_eq!(c.backbone, Backbone::Resnet101);
        assert_eq!(c.receptive_field, ReceptiveFieldMode::SalientPatch);
        assert_eq!(c.pooling, PoolingMode::Max);
        assert_eq!(c.metric, DistanceMetric::Cosine);
        assert!(c.with_time);
        assert_eq!(c.lstm_stride, 25);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let c = PipelineConfig {
            provider: ProviderConfig::Onnx {
                model: "models/resnet101.onnx".into(),
                output: Some("pool5".into()),
            },
            time_scale: TimeScale::Minutes(90.0),
            ..PipelineConfig::default()
        };
        let back = PipelineConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        let raw = PipelineConfig {
            time_scale: TimeScale::RawMinutes,
            ..PipelineConfig::default()
        };
        assert_eq!(PipelineConfig::from_json(&raw.to_json()).unwrap(), raw);
        assert_ne!(raw.hash(), c.hash());
    }

    #[test]
    fn partial_files_fill_defaults_and_typos_fail() {
        let c = PipelineConfig::from_json(r#"{"metric": "euclidean", "train": {"epochs": 3}}"#).unwrap();
        assert_eq!(c.metric, DistanceMetric::Euclidean);
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.hidden, 200);
        assert!(PipelineConfig::from_json(r#"{"metrik": "cosine"}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"lstm_stride": 10, "pooling_stride": 3}"#).is_err());
    }
}
