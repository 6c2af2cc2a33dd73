//! Temporal pooling of shot sequences and leave-one-out nearest-neighbor evaluation.

use serde::{Deserialize, Serialize};

use crate::dataset::Shot;
use crate::features::ShotDescriptorSequence;
use crate::metrics::{metrics, Metrics, MetricsError};
use crate::{par, Phase};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PoolingError {
    #[error("cannot pool an empty sequence")]
    EmptySequence,
    #[error("descriptor already carries an elapsed-time dimension")]
    AlreadyAugmented,
    #[error("time scale must be positive and finite, got {0}")]
    InvalidTimeScale(f64),
    #[error("vectors have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two descriptors, got {0}")]
    TooFewDescriptors(usize),
    #[error("descriptor {index} has no candidate neighbor")]
    NoCandidates { index: usize },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolingMode {
    Max,
    Average,
}

impl std::str::FromStr for PoolingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(PoolingMode::Max),
            "average" | "avg" | "mean" => Ok(PoolingMode::Average),
            _ => Err(format!("unknown pooling mode `{s}` (max, average)")),
        }
    }
}

impl std::fmt::Display for PoolingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PoolingMode::Max => "max",
            PoolingMode::Average => "average",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledDescriptor {
    pub values: Vec<f64>,
    pub time_augmented: bool,
    pub shot: Shot,
}

impl PooledDescriptor {
    pub fn label(&self) -> Phase {
        self.shot.phase
    }
}

pub fn temporal_pool(sequence: &ShotDescriptorSequence, mode: PoolingMode) -> Result<PooledDescriptor, PoolingError> {
    let first = sequence.entries.first().ok_or(PoolingError::EmptySequence)?;
    let dim = first.descriptor.len();
    let mut values: Vec<f64> = first.descriptor.iter().map(|&v| v as f64).collect();
    for entry in &sequence.entries[1..] {
        if entry.descriptor.len() != dim {
            return Err(PoolingError::LengthMismatch(dim, entry.descriptor.len()));
        }
        for (acc, &v) in values.iter_mut().zip(&entry.descriptor) {
            match mode {
                PoolingMode::Max => *acc = acc.max(v as f64),
                PoolingMode::Average => *acc += v as f64,
            }
        }
    }
    if mode == PoolingMode::Average {
        let n = sequence.entries.len() as f64;
        values.iter_mut().for_each(|v| *v /= n);
    }
    Ok(PooledDescriptor {
        values,
        time_augmented: false,
        shot: sequence.shot.clone(),
    })
}

/// Appends `elapsed_minutes / time_scale` as one extra dimension.
pub fn append_elapsed_time(mut desc: PooledDescriptor, time_scale: f64) -> Result<PooledDescriptor, PoolingError> {
    if desc.time_augmented {
        return Err(PoolingError::AlreadyAugmented);
    }
    if !(time_scale > 0.0 && time_scale.is_finite()) {
        return Err(PoolingError::InvalidTimeScale(time_scale));
    }
    desc.values.push(desc.shot.elapsed_minutes / time_scale);
    desc.time_augmented = true;
    Ok(desc)
}

/// How elapsed minutes are scaled before being appended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeScale {
    /// Longest operation in the corpus maps to 1.
    Auto,
    /// Minutes as they are.
    RawMinutes,
    Minutes(f64),
}

impl TimeScale {
    /// `longest_operation` is only consulted for `Auto`.
    pub fn resolve(self, longest_operation: f64) -> Result<f64, PoolingError> {
        let v = match self {
            TimeScale::Auto => longest_operation,
            TimeScale::RawMinutes => 1.0,
            TimeScale::Minutes(m) => m,
        };
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(PoolingError::InvalidTimeScale(v))
        }
    }
}

impl std::str::FromStr for TimeScale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(TimeScale::Auto),
            "raw-minutes" | "raw" => Ok(TimeScale::RawMinutes),
            _ => match s.parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => Ok(TimeScale::Minutes(v)),
                _ => Err(format!("time scale must be auto, raw-minutes or a positive number of minutes, got `{s}`")),
            },
        }
    }
}

impl std::fmt::Display for TimeScale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TimeScale::Auto => f.write_str("auto"),
            TimeScale::RawMinutes => f.write_str("raw-minutes"),
            TimeScale::Minutes(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    Euclidean,
    Cosine,
}

impl std::str::FromStr for DistanceMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(DistanceMetric::Euclidean),
            "cosine" => Ok(DistanceMetric::Cosine),
            _ => Err(format!("unknown metric `{s}` (euclidean, cosine)")),
        }
    }
}

impl std::fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DistanceMetric::Euclidean => "euclidean",
            DistanceMetric::Cosine => "cosine",
        })
    }
}

pub fn distance(a: &[f64], b: &[f64], metric: DistanceMetric) -> Result<f64, PoolingError> {
    if a.len() != b.len() {
        return Err(PoolingError::LengthMismatch(a.len(), b.len()));
    }
    Ok(match metric {
        DistanceMetric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        DistanceMetric::Cosine => {
            let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
            for (x, y) in a.iter().zip(b) {
                dot += x * y;
                na += x * x;
                nb += y * y;
            }
            if na == 0.0 || nb == 0.0 {
                1.0
            } else {
                // Rounding can push the ratio a hair past 1.
                (1.0 - dot / (na * nb).sqrt()).max(0.0)
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnOptions {
    pub metric: DistanceMetric,
    /// Exclude candidates from the query's own video.
    pub leave_one_video_out: bool,
}

impl KnnOptions {
    pub fn new(metric: DistanceMetric) -> Self {
        KnnOptions {
            metric,
            leave_one_video_out: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnPrediction {
    pub shot: Shot,
    pub truth: Phase,
    pub predicted: Phase,
    pub neighbor: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnEvalResult {
    pub options: KnnOptions,
    pub predictions: Vec<KnnPrediction>,
    pub metrics: Metrics,
}

impl KnnEvalResult {
    pub fn predicted(&self) -> Vec<Phase> {
        self.predictions.iter().map(|p| p.predicted).collect()
    }
}

/// Labels each descriptor with the class of its nearest other descriptor.
///
/// Ties go to the smallest index.
pub fn knn_loo_evaluate(descriptors: &[PooledDescriptor], options: KnnOptions) -> Result<KnnEvalResult, PoolingError> {
    let n = descriptors.len();
    if n < 2 {
        return Err(PoolingError::TooFewDescriptors(n));
    }
    let dim = descriptors[0].values.len();
    if let Some(d) = descriptors.iter().find(|d| d.values.len() != dim) {
        return Err(PoolingError::LengthMismatch(dim, d.values.len()));
    }
    let predictions = par::try_map_range(n, |i| -> Result<KnnPrediction, PoolingError> {
        let query = &descriptors[i];
        let mut best: Option<(usize, f64)> = None;
        for (j, cand) in descriptors.iter().enumerate() {
            if j == i || (options.leave_one_video_out && cand.shot.video_id == query.shot.video_id) {
                continue;
            }
            let d = distance(&query.values, &cand.values, options.metric)?;
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        let (neighbor, distance) = best.ok_or(PoolingError::NoCandidates { index: i })?;
        Ok(KnnPrediction {
            shot: query.shot.clone(),
            truth: query.label(),
            predicted: descriptors[neighbor].label(),
            neighbor,
            distance,
        })
    })?;
    let truths: Vec<Phase> = predictions.iter().map(|p| p.truth).collect();
    let predicted: Vec<Phase> = predictions.iter().map(|p| p.predicted).collect();
    let metrics = metrics(&predicted, &truths)?;
    Ok(KnnEvalResult {
        options,
        predictions,
        metrics,
    })
}
