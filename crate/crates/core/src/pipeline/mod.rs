//! Stage drivers shared by the command-line tool and the end-to-end run.
//!
//! Every stage reads files and writes files, so any one of them can be rerun
//! on its own from the outputs of the previous one.

mod config;
mod records;
mod stages;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use config::{PipelineConfig, ProviderConfig};
pub use records::{EvalKind, EvalRecord, PredictionRecord, Provenance};
pub use stages::{
    build_manifest, build_provider, corpus_stats, eval_models, extract_cache, knn_label, load_timelines,
    longest_operation, open_frames, pooled_descriptors, report_tables, run_knn, run_lstm, KnnSetup, LstmSetup,
    StatsRecord,
};

use crate::dataset::{DatasetError, ShotManifest};
use crate::features::{read_cache, write_cache, FeatureError, Preprocessor};
use crate::lstm::{read_model, write_model, LstmError};
use crate::metrics::{render_report, MetricsError, ReportFormat};
use crate::pooling::{KnnOptions, PoolingError};

/// Failure inside one stage.
#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Pooling(#[from] PoolingError),
    #[error(transparent)]
    Lstm(#[from] LstmError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("missing input {}", .0.display())]
    MissingInput(PathBuf),
    #[error("{0}")]
    Unsupported(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: StageError,
    },
}

impl PipelineError {
    pub fn stage(stage: &'static str) -> impl FnOnce(StageError) -> PipelineError {
        move |source| PipelineError::Stage { stage, source }
    }

    /// 2 for configuration, 4 for diverged training, 3 for any other data or
    /// I/O failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Stage { source, .. } => match source {
                StageError::Unsupported(_)
                | StageError::Lstm(LstmError::InvalidConfig(_))
                | StageError::Dataset(DatasetError::InvalidParameter(_)) => 2,
                StageError::Lstm(LstmError::NonFiniteLoss { .. }) => 4,
                _ => 3,
            },
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StageError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| json_err(path, e))?;
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StageError> {
    if !path.exists() {
        return Err(StageError::MissingInput(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| json_err(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), StageError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, source: std::io::Error) -> StageError {
    StageError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn json_err(path: &Path, source: serde_json::Error) -> StageError {
    StageError::Json {
        path: path.display().to_string(),
        source,
    }
}

pub fn provenance(stage: &str, config: &PipelineConfig, inputs: &[PathBuf], outputs: &[PathBuf]) -> Provenance {
    let names = |p: &[PathBuf]| p.iter().map(|p| p.display().to_string()).collect();
    Provenance {
        stage: stage.to_string(),
        config_hash: config.hash(),
        seed: config.seed(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        inputs: names(inputs),
        outputs: names(outputs),
        config: config.clone(),
    }
}

/// File layout of a run under `out_dir`.
#[derive(Debug, Clone)]
pub struct RunLayout {
    pub root: PathBuf,
}

impl RunLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunLayout { root: root.into() }
    }
    pub fn stats(&self) -> PathBuf {
        self.root.join("stats.json")
    }
    pub fn shots(&self) -> PathBuf {
        self.root.join("shots.json")
    }
    pub fn features(&self) -> PathBuf {
        self.root.join("features.spfc")
    }
    pub fn knn(&self) -> PathBuf {
        self.root.join("knn.json")
    }
    pub fn lstm(&self) -> PathBuf {
        self.root.join("lstm.json")
    }
    pub fn models(&self, cycles: usize) -> Vec<PathBuf> {
        cycle_model_paths(&self.root.join("models").join("lstm.splm"), cycles)
    }
    pub fn report(&self, ext: &str) -> PathBuf {
        self.root.join(format!("report.{ext}"))
    }
    pub fn provenance(&self, stage: &str) -> PathBuf {
        self.root.join("provenance").join(format!("{stage}.json"))
    }
}

/// `dir/name.splm` becomes `dir/name-cycle0.splm`, `dir/name-cycle1.splm`, ...
pub fn cycle_model_paths(base: &Path, cycles: usize) -> Vec<PathBuf> {
    let stem = base.file_stem().map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned());
    (0..cycles).map(|k| base.with_file_name(format!("{stem}-cycle{k}.splm"))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Ran,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageReport {
    pub stage: &'static str,
    pub status: StageStatus,
}

fn mtime(path: &Path) -> Option<SystemTime> {
    fs::metadata(path).and_then(|m| m.modified()).ok()
}

/// Outputs exist, none is older than any input, and the recorded config and
/// file lists match.
pub fn is_up_to_date(inputs: &[PathBuf], outputs: &[PathBuf], prov: &Path, hash: &str) -> bool {
    let Ok(recorded) = read_json::<Provenance>(prov) else {
        return false;
    };
    let names = |p: &[PathBuf]| p.iter().map(|p| p.display().to_string()).collect::<Vec<_>>();
    if recorded.config_hash != hash || recorded.inputs != names(inputs) || recorded.outputs != names(outputs) {
        return false;
    }
    let Some(oldest_out) = outputs.iter().map(|p| mtime(p)).collect::<Option<Vec<_>>>().and_then(|v| v.into_iter().min())
    else {
        return false;
    };
    inputs.iter().all(|p| mtime(p).is_some_and(|t| t <= oldest_out))
}

pub fn annotation_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map(|rd| rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_file()).collect())
        .unwrap_or_default();
    files.sort();
    files
}

/// Runs stats, shots, features, knn, lstm and report in order, skipping each
/// stage whose outputs are current unless `force` is set.
pub fn run_pipeline(
    config: &PipelineConfig,
    force: bool,
    log: &mut dyn FnMut(&str),
) -> Result<Vec<StageReport>, PipelineError> {
    config.validate()?;
    let layout = RunLayout::new(&config.out_dir);
    let hash = config.hash();
    let ann_dir = config.annotations_dir();
    let ann_files = annotation_files(&ann_dir);
    let frames = config.frames_path();
    let mut reports = Vec::new();

    let mut stage = |name: &'static str,
                     inputs: Vec<PathBuf>,
                     outputs: Vec<PathBuf>,
                     body: &mut dyn FnMut() -> Result<(), StageError>|
     -> Result<(), PipelineError> {
        let prov = layout.provenance(name);
        if !force && is_up_to_date(&inputs, &outputs, &prov, &hash) {
            log(&format!("{name}: up to date"));
            reports.push(StageReport {
                stage: name,
                status: StageStatus::Skipped,
            });
            return Ok(());
        }
        log(&format!("{name}: running"));
        body().map_err(PipelineError::stage(name))?;
        write_json(&prov, &provenance(name, config, &inputs, &outputs)).map_err(PipelineError::stage(name))?;
        reports.push(StageReport {
            stage: name,
            status: StageStatus::Ran,
        });
        Ok(())
    };

    stage("stats", ann_files.clone(), vec![layout.stats()], &mut || {
        let timelines = load_timelines(&ann_dir, config.fps)?;
        write_json(&layout.stats(), &corpus_stats(&timelines, config.overlap_bin_minutes)?)
    })?;

    stage("shots", ann_files.clone(), vec![layout.shots()], &mut || {
        let timelines = load_timelines(&ann_dir, config.fps)?;
        write_json(&layout.shots(), &build_manifest(&timelines, &config.shots)?)
    })?;

    let mut feature_inputs = vec![layout.shots()];
    if frames.is_file() {
        feature_inputs.push(frames.clone());
    }
    stage("features", feature_inputs, vec![layout.features()], &mut || {
        let manifest: ShotManifest = read_json(&layout.shots())?;
        let source = open_frames(&frames)?;
        let provider = build_provider(&config.provider, config.backbone)?;
        let spec = config.backbone.spec();
        let pre = Preprocessor::new(config.receptive_field, spec, config.saliency.clone());
        let cache = extract_cache(
            &manifest,
            source.as_ref(),
            &pre,
            &spec,
            provider.as_ref(),
            config.pooling_stride,
            config.fps,
        )?;
        if let Some(dir) = layout.features().parent() {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
        Ok(write_cache(&cache, &layout.features())?)
    })?;

    let time_scale = || -> Result<Option<f64>, StageError> {
        if !config.with_time {
            return Ok(None);
        }
        let stats: StatsRecord = read_json(&layout.stats())?;
        Ok(Some(config.time_scale.resolve(stats.longest_operation_minutes)?))
    };

    stage("knn", vec![layout.features(), layout.stats()], vec![layout.knn()], &mut || {
        let cache = read_cache(&layout.features())?;
        let setup = KnnSetup {
            label: knn_label(
                config.backbone,
                config.receptive_field,
                config.pooling,
                config.metric,
                config.with_time,
            ),
            pooling: config.pooling,
            options: KnnOptions {
                metric: config.metric,
                leave_one_video_out: config.leave_one_video_out,
            },
            time_scale: time_scale()?,
        };
        write_json(&layout.knn(), &run_knn(&cache, &setup)?)
    })?;

    let model_paths = layout.models(config.train.cycles);
    let mut lstm_outputs = vec![layout.lstm()];
    lstm_outputs.extend(model_paths.iter().cloned());
    stage("lstm", vec![layout.features(), layout.stats()], lstm_outputs, &mut || {
        let cache = read_cache(&layout.features())?;
        let setup = LstmSetup {
            label: format!("LSTM {} {}", config.backbone, config.receptive_field),
            train: config.train,
            stride: config.lstm_stride,
            time_scale: time_scale()?,
        };
        let (record, models) = run_lstm(&cache, &setup)?;
        for (m, path) in models.iter().zip(&model_paths) {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            }
            write_model(m, path)?;
        }
        write_json(&layout.lstm(), &record)
    })?;

    let report_outputs = ["txt", "csv", "json"].map(|e| layout.report(e)).to_vec();
    stage("report", vec![layout.knn(), layout.lstm()], report_outputs, &mut || {
        let records: Vec<EvalRecord> = vec![read_json(&layout.knn())?, read_json(&layout.lstm())?];
        let (rows, matrices) = report_tables(&records);
        for (ext, format) in [("txt", ReportFormat::Text), ("csv", ReportFormat::Csv), ("json", ReportFormat::Json)] {
            write_text(&layout.report(ext), &render_report(&rows, &matrices, format))?;
        }
        Ok(())
    })?;

    Ok(reports)
}

/// Loads `.splm` files in the given order.
pub fn load_models(paths: &[PathBuf]) -> Result<Vec<crate::lstm::ModelFile>, StageError> {
    paths
        .iter()
        .map(|p| {
            if !p.exists() {
                return Err(StageError::MissingInput(p.clone()));
            }
            Ok(read_model(p)?)
        })
        .collect()
}
