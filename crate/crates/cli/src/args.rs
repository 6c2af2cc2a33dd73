use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use surgphase::features::{Backbone, ReceptiveFieldMode};
use surgphase::metrics::ReportFormat;
use surgphase::pooling::{DistanceMetric, PoolingMode, TimeScale};

#[derive(Parser, Debug)]
#[command(name = "surgphase", version, about = "Surgical phase recognition of 10 s laparoscopic shots")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// JSON pipeline configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for shot sampling, data splits and initialization.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for default output paths.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Redo work even when outputs are newer than inputs.
    #[arg(long, global = true)]
    pub force: bool,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Phase duration statistics and the phase-overlap profile.
    Stats(StatsArgs),
    /// Sample the randomized 10 s shot dataset.
    ExtractShots(ShotsArgs),
    /// Write a frame's saliency map and chosen patch.
    SaliencyPreview(PreviewArgs),
    /// Compute per-frame descriptors for every shot.
    ExtractFeatures(FeaturesArgs),
    /// Leave-one-out 1-NN evaluation of pooled descriptors.
    EvalKnn(KnnArgs),
    /// Train LSTM classifiers over randomized cycles.
    TrainLstm(TrainArgs),
    /// Score saved LSTM models.
    EvalLstm(EvalLstmArgs),
    /// Merge result files into tables.
    Report(ReportArgs),
    /// Generate a synthetic corpus.
    Synth(SynthArgs),
    /// Run every stage from the configuration.
    Run,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// Directory of per-video annotation files.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long)]
    pub bin_minutes: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ShotsArgs {
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Shots kept per phase.
    #[arg(long)]
    pub per_phase: Option<usize>,
    #[arg(long)]
    pub per_video_per_phase: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PreviewArgs {
    pub image: PathBuf,
    #[arg(long)]
    pub scales: Option<usize>,
    #[arg(long)]
    pub orientations: Option<usize>,
    #[arg(long)]
    pub min_wavelength: Option<f64>,
    #[arg(long, default_value_t = 224)]
    pub patch_side: u32,
    /// Grayscale map output; defaults to `<out-dir>/<stem>-saliency.png`.
    #[arg(long)]
    pub map_out: Option<PathBuf>,
    /// Overlay output; defaults to `<out-dir>/<stem>-patch.png`.
    #[arg(long)]
    pub overlay_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FeaturesArgs {
    /// Shot manifest from `extract-shots`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Frame directory, or a synthetic `ground_truth.json`.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    #[arg(long)]
    pub backbone: Option<Backbone>,
    #[arg(long)]
    pub mode: Option<ReceptiveFieldMode>,
    /// Frame stride.
    #[arg(long)]
    pub stride: Option<u32>,
    /// `mock`, `mock:<seed>` or `runtime:<model.onnx>`.
    #[arg(long)]
    pub provider: Option<String>,
    /// Output layer of a runtime model.
    #[arg(long)]
    pub output_layer: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct TimeArgs {
    /// Append elapsed time to each descriptor.
    #[arg(long, conflicts_with = "no_time")]
    pub with_time: bool,
    #[arg(long)]
    pub no_time: bool,
    /// `auto`, `raw-minutes` or a number of minutes.
    #[arg(long)]
    pub time_scale: Option<TimeScale>,
    /// Annotations used to resolve `auto`; without them the cache's latest
    /// frame is used.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct KnnArgs {
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub pooling: Option<PoolingMode>,
    #[arg(long)]
    pub metric: Option<DistanceMetric>,
    #[command(flatten)]
    pub time: TimeArgs,
    /// Exclude neighbors from the query's own video.
    #[arg(long)]
    pub leave_one_video_out: bool,
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[command(flatten)]
    pub time: TimeArgs,
    /// Frame stride of the input sequences.
    #[arg(long)]
    pub stride: Option<u32>,
    #[arg(long)]
    pub cycles: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub train_per_class: Option<usize>,
    #[arg(long)]
    pub label: Option<String>,
    /// Model path; cycle `k` is written to `<stem>-cycle<k>.splm`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Result file; defaults to `<out-dir>/lstm.json`.
    #[arg(long)]
    pub result: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalLstmArgs {
    /// Model files, or the `--out` path given to `train-lstm`.
    #[arg(long = "model", num_args = 1.., required = true)]
    pub models: Vec<PathBuf>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Result files from `eval-knn`, `train-lstm` or `eval-lstm`.
    #[arg(num_args = 0..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "text")]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Corpus root; defaults to the configured dataset root.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub videos: Option<usize>,
    /// Multiplies every phase duration.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Shuffle the phase order per video.
    #[arg(long)]
    pub no_time_dependence: bool,
    /// The first N videos skip P7.
    #[arg(long)]
    pub missing_p7: Option<usize>,
    /// Visual similarity of P(k) and P(k+4), in [0, 1].
    #[arg(long)]
    pub overlap: Option<f64>,
    /// Also write every frame as PNG; otherwise frames render on demand.
    #[arg(long)]
    pub write_frames: bool,
}
