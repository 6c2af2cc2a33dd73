//! Desk-scale stand-in corpus: annotation timelines, procedurally drawn frames
//! and descriptor sequences with known ground truth.

use std::collections::HashMap;
use std::path::Path;

use image::{Rgb, RgbImage};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{AnnotationTimeline, DatasetError, ShotManifest, DEFAULT_FPS};
use crate::features::{
    sample_offsets, FeatureCache, FeatureError, FrameDirectory, FrameSource, SequenceEntry, ShotDescriptorSequence,
};
use crate::{par, Phase, NUM_PHASES};

/// Duration statistics of one phase, in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseDuration {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

const fn dur(mean: f64, std: f64, min: f64, max: f64) -> PhaseDuration {
    PhaseDuration { mean, std, min, max }
}

/// Phase durations observed over the 27 annotated cholecystectomies.
pub const REFERENCE_DURATIONS: [PhaseDuration; NUM_PHASES] = [
    dur(3.04, 1.70, 1.42, 7.08),
    dur(1.71, 2.06, 0.35, 11.03),
    dur(10.53, 7.97, 1.95, 26.82),
    dur(4.70, 2.87, 0.94, 12.39),
    dur(10.40, 6.30, 1.68, 24.11),
    dur(1.14, 0.59, 0.28, 3.03),
    dur(5.68, 2.80, 1.01, 15.97),
    dur(4.93, 5.61, 0.66, 22.26),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticCorpusSpec {
    pub num_videos: usize,
    pub durations: [PhaseDuration; NUM_PHASES],
    /// Multiplies every drawn duration; small values give desk-sized corpora.
    pub scale: f64,
    /// Floor on each phase's length. At 30 s two 10 s shots fit wherever the
    /// first one lands.
    pub min_phase_seconds: f64,
    /// Lay phases out P1..P8; otherwise the order is shuffled per video.
    pub time_dependent: bool,
    /// The first `missing_p7` videos skip P7.
    pub missing_p7: usize,
    /// Spread of the per-phase descriptor centers.
    pub separation: f64,
    /// 0 keeps phase appearances distinct; 1 makes P(k) and P(k+4) look identical.
    pub visual_overlap: f64,
    /// Per-shot and per-frame descriptor noise.
    pub noise: f64,
    pub descriptor_dim: usize,
    pub width: u32,
    pub height: u32,
    pub fps: u32,
    pub seed: u64,
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        SyntheticCorpusSpec {
            num_videos: 27,
            durations: REFERENCE_DURATIONS,
            scale: 1.0,
            min_phase_seconds: 30.0,
            time_dependent: true,
            missing_p7: 0,
            separation: 1.0,
            visual_overlap: 0.0,
            noise: 0.3,
            descriptor_dim: 32,
            width: 160,
            height: 90,
            fps: DEFAULT_FPS,
            seed: 0,
        }
    }
}

impl SyntheticCorpusSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::InvalidParameter(m));
        if self.num_videos == 0 {
            return bad("num_videos must be positive".into());
        }
        if self.missing_p7 > self.num_videos {
            return bad("missing_p7 exceeds num_videos".into());
        }
        if !(self.scale > 0.0) || !(self.min_phase_seconds > 0.0) || self.fps == 0 {
            return bad("scale, min_phase_seconds and fps must be positive".into());
        }
        for (p, d) in Phase::ALL.iter().zip(&self.durations) {
            if !(d.mean > 0.0 && d.std >= 0.0 && d.min > 0.0 && d.min <= d.max) {
                return bad(format!("{p}: durations must be positive with min <= max"));
            }
        }
        if !(0.0..=1.0).contains(&self.visual_overlap) {
            return bad("visual_overlap must lie in [0, 1]".into());
        }
        if self.descriptor_dim == 0 || self.width < 16 || self.height < 16 {
            return bad("descriptor_dim must be positive and frames at least 16x16".into());
        }
        Ok(())
    }

    pub fn video_id(&self, k: usize) -> String {
        format!("synth_video_{:02}", k + 1)
    }

    fn phase_rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Truncated normal by rejection, clamped if the window is improbable.
fn truncated_normal(d: &PhaseDuration, rng: &mut impl Rng) -> f64 {
    let normal = Normal::new(d.mean, d.std.max(1e-9)).expect("finite parameters");
    for _ in 0..1000 {
        let v = normal.sample(rng);
        if (d.min..=d.max).contains(&v) {
            return v;
        }
    }
    d.mean.clamp(d.min, d.max)
}

/// Phase timelines for every video of the spec.
pub fn generate_timelines(spec: &SyntheticCorpusSpec) -> Result<Vec<AnnotationTimeline>, DatasetError> {
    spec.validate()?;
    let mut rng = spec.phase_rng(0);
    let floor_frames = (spec.min_phase_seconds * spec.fps as f64).ceil() as u32;
    (0..spec.num_videos)
        .map(|k| {
            let mut order: Vec<Phase> = Phase::ALL.to_vec();
            if !spec.time_dependent {
                order.shuffle(&mut rng);
            }
            let segments: Vec<(Phase, u32)> = order
                .into_iter()
                .filter(|&p| !(p == Phase::P7 && k < spec.missing_p7))
                .map(|p| {
                    let minutes = truncated_normal(&spec.durations[p.index()], &mut rng) * spec.scale;
                    let frames = (minutes * 60.0 * spec.fps as f64).round() as u32;
                    (p, frames.max(floor_frames))
                })
                .collect();
            AnnotationTimeline::from_durations(spec.video_id(k), spec.fps, &segments)
        })
        .collect()
}

/// Everything needed to regenerate the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SyntheticCorpusSpec,
    /// Per video, the phase segments as `(phase, frames)`.
    pub videos: Vec<(String, Vec<(Phase, u32)>)>,
}

impl GroundTruth {
    pub fn new(spec: &SyntheticCorpusSpec, timelines: &[AnnotationTimeline]) -> Self {
        GroundTruth {
            spec: spec.clone(),
            videos: timelines
                .iter()
                .map(|t| (t.video_id.clone(), t.runs().iter().map(|r| (r.phase, r.end - r.start + 1)).collect()))
                .collect(),
        }
    }

    pub fn timelines(&self) -> Result<Vec<AnnotationTimeline>, DatasetError> {
        self.videos
            .iter()
            .map(|(id, segs)| AnnotationTimeline::from_durations(id.clone(), self.spec.fps, segs))
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Anchor (x, y in [0, 1]) and colour of each phase's motif, after blending
/// with its partner phase by `visual_overlap`.
fn motif(phase: Phase, overlap: f64) -> ([f64; 2], [f64; 3], f64) {
    const ANCHORS: [[f64; 2]; NUM_PHASES] = [
        [0.2, 0.28],
        [0.8, 0.28],
        [0.2, 0.72],
        [0.8, 0.72],
        [0.5, 0.25],
        [0.5, 0.75],
        [0.35, 0.5],
        [0.65, 0.5],
    ];
    const COLOURS: [[f64; 3]; NUM_PHASES] = [
        [0.95, 0.85, 0.2],
        [0.2, 0.9, 0.3],
        [0.2, 0.5, 0.95],
        [0.9, 0.3, 0.9],
        [0.95, 0.95, 0.95],
        [0.1, 0.9, 0.9],
        [0.95, 0.55, 0.1],
        [0.3, 0.2, 0.6],
    ];
    let own = |p: usize| {
        let anchor = ANCHORS[p];
        let freq = 0.15 + 0.05 * p as f64;
        (anchor, COLOURS[p], freq)
    };
    let k = phase.index();
    let (a, c, f) = own(k);
    let (pa, pc, pf) = own((k + 4) % NUM_PHASES);
    let w = overlap / 2.0;
    let mix = |x: f64, y: f64| x + (y - x) * w;
    (
        [mix(a[0], pa[0]), mix(a[1], pa[1])],
        [mix(c[0], pc[0]), mix(c[1], pc[1]), mix(c[2], pc[2])],
        mix(f, pf),
    )
}

fn hash3(a: u64, b: u64, c: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ c.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn unit(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// One frame: tissue-like background with a phase-coded striped blob that
/// drifts slowly over time.
pub fn draw_frame(spec: &SyntheticCorpusSpec, video: usize, phase: Phase, frame_index: u32) -> RgbImage {
    let (w, h) = (spec.width as f64, spec.height as f64);
    let (anchor, colour, freq) = motif(phase, spec.visual_overlap);
    let v = video as u64;
    let jitter = |salt: u64| (unit(hash3(spec.seed, v, salt)) - 0.5) * 0.08;
    let t = frame_index as f64 / spec.fps as f64;
    let cx = (anchor[0] + jitter(1) + 0.03 * (t * 0.7 + v as f64).sin()) * w;
    let cy = (anchor[1] + jitter(2) + 0.03 * (t * 0.5 + v as f64).cos()) * h;
    let radius = 0.14 * w.min(h) * 1.4;
    let noise_seed = hash3(spec.seed ^ 0x5eed, v, frame_index as u64);
    RgbImage::from_fn(spec.width, spec.height, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        let base = [0.55 + 0.15 * fy / h, 0.25 + 0.1 * fx / w, 0.25];
        let d2 = ((fx - cx).powi(2) + (fy - cy).powi(2)) / (radius * radius);
        let weight = (-d2 * 2.0).exp();
        let stripe = 0.75 + 0.25 * (std::f64::consts::TAU * freq * (fx + fy)).sin();
        let n = (unit(hash3(noise_seed, x as u64, y as u64)) - 0.5) * 0.04;
        let px = |c: usize| {
            let v = base[c] * (1.0 - weight) + colour[c] * stripe * weight + n;
            (v.clamp(0.0, 1.0) * 255.0).round() as u8
        };
        Rgb([px(0), px(1), px(2)])
    })
}

/// Renders frames of a synthetic corpus on demand.
pub struct SyntheticFrames {
    spec: SyntheticCorpusSpec,
    videos: HashMap<String, (usize, AnnotationTimeline)>,
}

impl SyntheticFrames {
    pub fn new(truth: &GroundTruth) -> Result<Self, DatasetError> {
        let videos = truth
            .timelines()?
            .into_iter()
            .enumerate()
            .map(|(k, t)| (t.video_id.clone(), (k, t)))
            .collect();
        Ok(SyntheticFrames {
            spec: truth.spec.clone(),
            videos,
        })
    }
}

impl FrameSource for SyntheticFrames {
    fn read_frame(&self, video_id: &str, frame_index: u32) -> Result<RgbImage, FeatureError> {
        let missing = || FeatureError::FrameMissing {
            video_id: video_id.to_string(),
            index: frame_index,
        };
        let (k, timeline) = self.videos.get(video_id).ok_or_else(missing)?;
        let phase = timeline.phase_at(frame_index).ok_or_else(missing)?;
        Ok(draw_frame(&self.spec, *k, phase, frame_index))
    }
}

/// Writes annotations, the ground-truth record and optionally every frame.
pub fn write_corpus(
    truth: &GroundTruth,
    root: &Path,
    write_frames: bool,
) -> Result<Vec<AnnotationTimeline>, FeatureError> {
    let timelines = truth.timelines().map_err(|e| FeatureError::InvalidArgument(e.to_string()))?;
    let ann = root.join("annotations");
    std::fs::create_dir_all(&ann).map_err(|e| FeatureError::io(&ann, e))?;
    for t in &timelines {
        let path = ann.join(format!("{}.txt", t.video_id));
        std::fs::write(&path, t.to_annotation_text()).map_err(|e| FeatureError::io(&path, e))?;
    }
    let gt = root.join("ground_truth.json");
    let text = serde_json::to_string_pretty(truth).map_err(|e| FeatureError::InvalidArgument(e.to_string()))?;
    std::fs::write(&gt, text).map_err(|e| FeatureError::io(&gt, e))?;
    if write_frames {
        let dir = FrameDirectory::new(root.join("frames"));
        for (k, t) in timelines.iter().enumerate() {
            par::try_map_range(t.num_frames() as usize, |f| {
                let frame = f as u32;
                let phase = t.phase_at(frame).expect("frame inside timeline");
                dir.write_frame(&t.video_id, frame, &draw_frame(&truth.spec, k, phase, frame))
            })?;
        }
    }
    Ok(timelines)
}

/// Descriptor centers, blended between partner phases like the frame motifs.
fn descriptor_centers(spec: &SyntheticCorpusSpec) -> Vec<Vec<f64>> {
    let mut rng = spec.phase_rng(1);
    let normal = Normal::new(0.0, spec.separation).expect("finite separation");
    let own: Vec<Vec<f64>> = (0..NUM_PHASES)
        .map(|_| (0..spec.descriptor_dim).map(|_| normal.sample(&mut rng)).collect())
        .collect();
    let w = spec.visual_overlap / 2.0;
    (0..NUM_PHASES)
        .map(|k| {
            let partner = &own[(k + 4) % NUM_PHASES];
            own[k].iter().zip(partner).map(|(a, b)| a + (b - a) * w).collect()
        })
        .collect()
}

/// Descriptor sequences drawn directly around per-phase centers, skipping
/// frame rendering. Shots get a persistent offset plus per-frame jitter.
pub fn synthesize_cache(spec: &SyntheticCorpusSpec, manifest: &ShotManifest, stride: u32) -> Result<FeatureCache, FeatureError> {
    spec.validate().map_err(|e| FeatureError::InvalidArgument(e.to_string()))?;
    if stride == 0 {
        return Err(FeatureError::InvalidArgument("stride must be positive".into()));
    }
    let centers = descriptor_centers(spec);
    let noise = Normal::new(0.0, spec.noise.max(0.0)).expect("finite noise");
    let sequences = par::map_range(manifest.shots.len(), |i| {
        let shot = &manifest.shots[i];
        let mut rng = spec.phase_rng(2 + i as u64);
        let center = &centers[shot.phase.index()];
        let offset: Vec<f64> = center.iter().map(|c| c + noise.sample(&mut rng)).collect();
        let per_minute = spec.fps as f64 * 60.0;
        let entries = sample_offsets(shot.num_frames, stride)
            .map(|off| SequenceEntry {
                frame_offset: off,
                elapsed_minutes: (shot.start_frame + off) as f64 / per_minute,
                descriptor: offset.iter().map(|o| (o + noise.sample(&mut rng) * 0.5) as f32).collect(),
            })
            .collect();
        ShotDescriptorSequence {
            shot: shot.clone(),
            stride,
            entries,
        }
    });
    FeatureCache::new(sequences)
}
