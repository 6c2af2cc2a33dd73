use std::collections::HashSet;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::records::{EvalKind, EvalRecord, PredictionRecord};
use super::{ProviderConfig, StageError};
use crate::dataset::{
    extract_shots, load_annotation_dir, overlap_profile, phase_statistics, AnnotationTimeline, OverlapProfile,
    PhaseStats, ShotConfig, ShotManifest,
};
use crate::features::{
    extract_sequence, Backbone, BackboneSpec, FeatureCache, FeatureProvider, FrameDirectory, FrameSource, MockProvider,
    Preprocessor,
};
use crate::lstm::{
    evaluate, make_splits, sequences_from_cache, train, ModelFile, ModelMeta, ShotRef, TrainConfig, TrainOutcome,
};
use crate::metrics::{LabeledMatrix, MetricRow, Metrics, ReportRow};
use crate::pooling::{append_elapsed_time, knn_loo_evaluate, temporal_pool, KnnOptions, PooledDescriptor, PoolingMode};
use crate::synth::{GroundTruth, SyntheticFrames};
use crate::Phase;

/// Corpus summary written by the `stats` stage.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct StatsRecord {
    pub videos: usize,
    pub longest_operation_minutes: f64,
    pub phases: PhaseStats,
    pub overlap: OverlapProfile,
}

pub fn load_timelines(dir: &Path, fps: u32) -> Result<Vec<AnnotationTimeline>, StageError> {
    if !dir.is_dir() {
        return Err(StageError::MissingInput(dir.to_path_buf()));
    }
    Ok(load_annotation_dir(dir, fps)?)
}

pub fn longest_operation(timelines: &[AnnotationTimeline]) -> f64 {
    timelines.iter().map(AnnotationTimeline::duration_minutes).fold(0.0, f64::max)
}

pub fn corpus_stats(timelines: &[AnnotationTimeline], bin_minutes: f64) -> Result<StatsRecord, StageError> {
    Ok(StatsRecord {
        videos: timelines.len(),
        longest_operation_minutes: longest_operation(timelines),
        phases: phase_statistics(timelines)?,
        overlap: overlap_profile(timelines, bin_minutes)?,
    })
}

pub fn build_manifest(timelines: &[AnnotationTimeline], config: &ShotConfig) -> Result<ShotManifest, StageError> {
    let manifest = extract_shots(timelines, config)?;
    manifest.validate(timelines)?;
    Ok(manifest)
}

/// A `.json` path is a synthetic ground truth rendered on demand; anything
/// else is a frame directory.
pub fn open_frames(path: &Path) -> Result<Box<dyn FrameSource>, StageError> {
    if path.extension().is_some_and(|e| e == "json") {
        if !path.is_file() {
            return Err(StageError::MissingInput(path.to_path_buf()));
        }
        let truth = GroundTruth::load(path)?;
        return Ok(Box::new(SyntheticFrames::new(&truth)?));
    }
    if !path.is_dir() {
        return Err(StageError::MissingInput(path.to_path_buf()));
    }
    Ok(Box::new(FrameDirectory::new(path)))
}

#[cfg_attr(not(feature = "onnx"), allow(unused_variables))]
pub fn build_provider(config: &ProviderConfig, backbone: Backbone) -> Result<Box<dyn FeatureProvider>, StageError> {
    match config {
        ProviderConfig::Mock { seed } => Ok(Box::new(MockProvider::new(*seed))),
        #[cfg(feature = "onnx")]
        ProviderConfig::Onnx { model, output } => Ok(Box::new(crate::features::RuntimeProvider::load(
            model,
            backbone,
            output.as_deref(),
        )?)),
        #[cfg(not(feature = "onnx"))]
        ProviderConfig::Onnx { .. } => Err(StageError::Unsupported(
            "this build has no ONNX runtime; rebuild with the `onnx` feature".into(),
        )),
    }
}

/// Extracts every shot of the manifest. Frames within a shot run in parallel.
pub fn extract_cache(
    manifest: &ShotManifest,
    frames: &dyn FrameSource,
    preprocessor: &Preprocessor,
    backbone: &BackboneSpec,
    provider: &dyn FeatureProvider,
    stride: u32,
    fps: u32,
) -> Result<FeatureCache, StageError> {
    let sequences = manifest
        .shots
        .iter()
        .map(|shot| extract_sequence(shot, frames, preprocessor, backbone, provider, stride, fps))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FeatureCache::new(sequences)?)
}

/// Pools each sequence and optionally appends scaled elapsed time.
pub fn pooled_descriptors(
    cache: &FeatureCache,
    mode: PoolingMode,
    time_scale: Option<f64>,
) -> Result<Vec<PooledDescriptor>, StageError> {
    cache
        .sequences
        .iter()
        .map(|s| {
            let d = temporal_pool(s, mode)?;
            Ok(match time_scale {
                Some(scale) => append_elapsed_time(d, scale)?,
                None => d,
            })
        })
        .collect()
}

/// Settings of one 1-NN evaluation.
#[derive(Debug, Clone)]
pub struct KnnSetup {
    pub label: String,
    pub pooling: PoolingMode,
    pub options: KnnOptions,
    pub time_scale: Option<f64>,
}

pub fn run_knn(cache: &FeatureCache, setup: &KnnSetup) -> Result<EvalRecord, StageError> {
    let descriptors = pooled_descriptors(cache, setup.pooling, setup.time_scale)?;
    let result = knn_loo_evaluate(&descriptors, setup.options)?;
    let predictions = result
        .predictions
        .iter()
        .map(|p| PredictionRecord {
            video_id: p.shot.video_id.clone(),
            start_frame: p.shot.start_frame,
            truth: p.truth,
            predicted: p.predicted,
            neighbor: Some(p.neighbor),
            distance: Some(p.distance),
            cycle: None,
        })
        .collect();
    Ok(EvalRecord {
        kind: EvalKind::Knn,
        label: setup.label.clone(),
        settings: json!({
            "pooling": setup.pooling,
            "metric": setup.options.metric,
            "leave_one_video_out": setup.options.leave_one_video_out,
            "time_scale": setup.time_scale,
            "stride": cache.stride,
            "descriptor_dim": cache.descriptor_dim,
        }),
        row: result.metrics.macro_row,
        std: None,
        cycle_rows: Vec::new(),
        metrics: result.metrics,
        predictions,
    })
}

/// Settings of one LSTM training run.
#[derive(Debug, Clone)]
pub struct LstmSetup {
    pub label: String,
    pub train: TrainConfig,
    pub stride: u32,
    pub time_scale: Option<f64>,
}

/// Trains every cycle and returns the evaluation with one model file per cycle.
pub fn run_lstm(cache: &FeatureCache, setup: &LstmSetup) -> Result<(EvalRecord, Vec<ModelFile>), StageError> {
    let sub = cache.subsample(setup.stride)?;
    let set = sequences_from_cache(&sub, setup.time_scale)?;
    let splits = make_splits(&set.labels, setup.train.seed, setup.train.cycles, setup.train.train_per_class)?;
    let outcome = train(&set, &splits, &setup.train)?;

    let models = outcome
        .cycles
        .iter()
        .map(|c| ModelFile {
            model: c.trained.model.clone(),
            meta: ModelMeta {
                config: setup.train,
                seed: setup.train.seed,
                cycle: c.trained.cycle,
                initial_loss: c.trained.initial_loss,
                loss_trace: c.trained.loss_trace.clone(),
                time_scale: setup.time_scale,
                stride: Some(setup.stride),
                test_shots: c
                    .split
                    .test
                    .iter()
                    .map(|&i| ShotRef {
                        video_id: set.shots[i].video_id.clone(),
                        start_frame: set.shots[i].start_frame,
                    })
                    .collect(),
            },
        })
        .collect();
    let record = lstm_record(&setup.label, setup, &set.shots, &outcome)?;
    Ok((record, models))
}

fn lstm_record(
    label: &str,
    setup: &LstmSetup,
    shots: &[crate::dataset::Shot],
    outcome: &TrainOutcome,
) -> Result<EvalRecord, StageError> {
    let mut predictions = Vec::new();
    for c in &outcome.cycles {
        for (&i, &p) in c.split.test.iter().zip(&c.predictions) {
            predictions.push(PredictionRecord {
                video_id: shots[i].video_id.clone(),
                start_frame: shots[i].start_frame,
                truth: shots[i].phase,
                predicted: p,
                neighbor: None,
                distance: None,
                cycle: Some(c.trained.cycle),
            });
        }
    }
    Ok(EvalRecord {
        kind: EvalKind::Lstm,
        label: label.to_string(),
        settings: json!({
            "train": setup.train,
            "stride": setup.stride,
            "time_scale": setup.time_scale,
            "initial_loss": outcome.cycles.iter().map(|c| c.trained.initial_loss).collect::<Vec<_>>(),
            "final_loss": outcome.cycles.iter().map(|c| c.trained.loss_trace.last().copied()).collect::<Vec<_>>(),
        }),
        row: outcome.mean,
        std: Some(outcome.std),
        cycle_rows: outcome.cycles.iter().map(|c| c.metrics.macro_row).collect(),
        metrics: Metrics::from_confusion(outcome.pooled)?,
        predictions,
    })
}

/// Scores saved models on a cache, each on its own held-out shots.
///
/// A model without recorded test shots is scored on the whole cache.
pub fn eval_models(models: &[ModelFile], cache: &FeatureCache, label: &str) -> Result<EvalRecord, StageError> {
    if models.is_empty() {
        return Err(StageError::Unsupported("no models given".into()));
    }
    let mut predictions = Vec::new();
    let mut rows = Vec::new();
    let mut pooled = crate::metrics::ConfusionMatrix::default();
    for m in models {
        let stride = m.meta.stride.unwrap_or(cache.stride);
        let sub = cache.subsample(stride)?;
        let set = sequences_from_cache(&sub, m.meta.time_scale)?;
        let wanted: HashSet<&ShotRef> = m.meta.test_shots.iter().collect();
        let idx: Vec<usize> = (0..set.len())
            .filter(|&i| {
                wanted.is_empty()
                    || wanted.contains(&ShotRef {
                        video_id: set.shots[i].video_id.clone(),
                        start_frame: set.shots[i].start_frame,
                    })
            })
            .collect();
        if idx.is_empty() {
            return Err(StageError::Unsupported(format!(
                "none of cycle {}'s test shots are in the cache",
                m.meta.cycle
            )));
        }
        let predicted = evaluate(&m.model, &set, &idx)?;
        let truths: Vec<Phase> = idx.iter().map(|&i| set.labels[i]).collect();
        let metrics = crate::metrics::metrics(&predicted, &truths)?;
        rows.push(metrics.macro_row);
        pooled.merge(&metrics.confusion);
        for (&i, &p) in idx.iter().zip(&predicted) {
            predictions.push(PredictionRecord {
                video_id: set.shots[i].video_id.clone(),
                start_frame: set.shots[i].start_frame,
                truth: set.labels[i],
                predicted: p,
                neighbor: None,
                distance: None,
                cycle: Some(m.meta.cycle),
            });
        }
    }
    let (mean, std) = MetricRow::mean_std(&rows);
    Ok(EvalRecord {
        kind: EvalKind::Lstm,
        label: label.to_string(),
        settings: json!({ "models": models.len() }),
        row: mean,
        std: Some(std),
        cycle_rows: rows,
        metrics: Metrics::from_confusion(pooled)?,
        predictions,
    })
}

pub fn report_tables(records: &[EvalRecord]) -> (Vec<ReportRow>, Vec<LabeledMatrix>) {
    (
        records.iter().map(EvalRecord::report_row).collect(),
        records.iter().map(EvalRecord::matrix).collect(),
    )
}

/// Human-readable label of a 1-NN configuration.
pub fn knn_label(backbone: Backbone, receptive: impl std::fmt::Display, pooling: PoolingMode, metric: impl std::fmt::Display, with_time: bool) -> String {
    format!(
        "1-NN {backbone} {receptive} {pooling} {metric}{}",
        if with_time { " +time" } else { "" }
    )
}
