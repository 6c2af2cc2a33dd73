use serde::{Deserialize, Serialize};

use super::PipelineConfig;
use crate::metrics::{LabeledMatrix, MetricRow, Metrics, ReportRow};
use crate::Phase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalKind {
    Knn,
    Lstm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub video_id: String,
    pub start_frame: u32,
    pub truth: Phase,
    pub predicted: Phase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbor: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<usize>,
}

/// Result file written by the evaluation stages and merged by `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub kind: EvalKind,
    pub label: String,
    pub settings: serde_json::Value,
    /// Macro row; for trained models, the mean over cycles.
    pub row: MetricRow,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<MetricRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cycle_rows: Vec<MetricRow>,
    /// Over every prediction; for trained models, pooled across cycles.
    pub metrics: Metrics,
    pub predictions: Vec<PredictionRecord>,
}

impl EvalRecord {
    pub fn report_row(&self) -> ReportRow {
        ReportRow {
            label: self.label.clone(),
            row: self.row,
            std: self.std,
            one_vs_rest_accuracy: Some(self.metrics.one_vs_rest_accuracy),
        }
    }

    pub fn matrix(&self) -> LabeledMatrix {
        LabeledMatrix {
            label: self.label.clone(),
            matrix: self.metrics.confusion,
        }
    }
}

/// Written next to each stage's outputs; holds enough to rerun the stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub stage: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub config: PipelineConfig,
}
