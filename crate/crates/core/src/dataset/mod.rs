//! Phase annotations, corpus statistics and the randomized 10 s shot dataset.

mod annotation;
mod shots;
mod stats;

pub use annotation::{load_annotation_dir, parse_annotations, AnnotationTimeline, PhaseRun};
pub use shots::{extract_shots, Shot, ShotConfig, ShotDeficit, ShotManifest};
pub use stats::{overlap_profile, phase_statistics, DurationSummary, OverlapProfile, PhaseStats};

use crate::phase::Phase;

/// Frame rate of the source recordings.
pub const DEFAULT_FPS: u32 = 25;

/// Frames in one 10 s shot at 25 fps.
pub const SHOT_FRAMES: u32 = 250;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("malformed annotation line {line}")]
    MalformedLine { line: usize },
    #[error("unknown phase `{name}` on line {line}")]
    UnknownPhase { line: usize, name: String },
    #[error("annotation frames are not contiguous at frame {frame}")]
    NonContiguousFrames { frame: u64 },
    #[error("no annotation timelines given")]
    EmptyCorpus,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("phase {phase}: only {available} shots available, {target} required")]
    InsufficientShots {
        phase: Phase,
        available: usize,
        target: usize,
    },
    #[error("shot manifest violates an invariant: {0}")]
    InvalidManifest(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
