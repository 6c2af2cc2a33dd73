use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::phase::Phase;

/// A maximal run of frames carrying one label, `end` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRun {
    pub start: u32,
    pub end: u32,
    pub phase: Phase,
}

impl PhaseRun {
    pub fn len(&self) -> u32 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Frame-indexed phase labels of one operation, stored run-length encoded.
///
/// Runs are sorted, non-overlapping and cover `0..=last_frame` without gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationTimeline {
    pub video_id: String,
    pub fps: u32,
    runs: Vec<PhaseRun>,
}

impl AnnotationTimeline {
    /// Builds a timeline from runs, checking contiguity from frame 0.
    pub fn from_runs(
        video_id: impl Into<String>,
        fps: u32,
        runs: Vec<PhaseRun>,
    ) -> Result<Self, DatasetError> {
        if fps == 0 {
            return Err(DatasetError::InvalidParameter("fps must be positive".into()));
        }
        let mut next = 0u32;
        for run in &runs {
            if run.start != next || run.end < run.start {
                return Err(DatasetError::NonContiguousFrames {
                    frame: run.start as u64,
                });
            }
            next = run.end + 1;
        }
        if runs.is_empty() {
            return Err(DatasetError::MalformedLine { line: 1 });
        }
        let mut merged: Vec<PhaseRun> = Vec::with_capacity(runs.len());
        for run in runs {
            match merged.last_mut() {
                Some(last) if last.phase == run.phase => last.end = run.end,
                _ => merged.push(run),
            }
        }
        Ok(AnnotationTimeline {
            video_id: video_id.into(),
            fps,
            runs: merged,
        })
    }

    /// Builds a timeline from consecutive (phase, frame count) segments.
    pub fn from_durations(
        video_id: impl Into<String>,
        fps: u32,
        segments: &[(Phase, u32)],
    ) -> Result<Self, DatasetError> {
        let mut runs = Vec::with_capacity(segments.len());
        let mut start = 0u32;
        for &(phase, frames) in segments {
            if frames == 0 {
                continue;
            }
            runs.push(PhaseRun {
                start,
                end: start + frames - 1,
                phase,
            });
            start += frames;
        }
        Self::from_runs(video_id, fps, runs)
    }

    pub fn runs(&self) -> &[PhaseRun] {
        &self.runs
    }

    pub fn num_frames(&self) -> u32 {
        self.runs.last().map_or(0, |r| r.end + 1)
    }

    pub fn frames_per_minute(&self) -> f64 {
        self.fps as f64 * 60.0
    }

    pub fn duration_minutes(&self) -> f64 {
        self.num_frames() as f64 / self.frames_per_minute()
    }

    /// Label of `frame`, or `None` past the end.
    pub fn phase_at(&self, frame: u32) -> Option<Phase> {
        let idx = self.runs.partition_point(|r| r.end < frame);
        self.runs
            .get(idx)
            .filter(|r| r.start <= frame)
            .map(|r| r.phase)
    }

    pub fn runs_of(&self, phase: Phase) -> impl Iterator<Item = &PhaseRun> {
        self.runs.iter().filter(move |r| r.phase == phase)
    }

    /// Renders the timeline in the per-frame annotation format with a header.
    pub fn to_annotation_text(&self) -> String {
        let mut out = String::with_capacity(self.num_frames() as usize * 24);
        out.push_str("Frame\tPhase\n");
        for run in &self.runs {
            for f in run.start..=run.end {
                out.push_str(&f.to_string());
                out.push('\t');
                out.push_str(run.phase.annotation_name());
                out.push('\n');
            }
        }
        out
    }
}

/// Parses `<frame_index> <phase_name>` lines.
///
/// Frames may be listed densely or only at run starts. A jump in frame index
/// that keeps the previous phase is a gap, unless it is the last line, where it
/// marks the final frame of the last run. One non-numeric header line is
/// tolerated before the first data line.
pub fn parse_annotations(
    text: &str,
    video_id: &str,
    fps: u32,
) -> Result<AnnotationTimeline, DatasetError> {
    let mut rows: Vec<(usize, u64, Phase)> = Vec::new();
    let mut seen_content = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (first, rest) = match line.split_once(char::is_whitespace) {
            Some((a, b)) => (a, b.trim()),
            None => (line, ""),
        };
        let frame = match first.parse::<u64>() {
            Ok(f) => f,
            Err(_) if !seen_content && first.parse::<f64>().is_err() => {
                seen_content = true;
                continue;
            }
            Err(_) => return Err(DatasetError::MalformedLine { line: line_no }),
        };
        seen_content = true;
        if rest.is_empty() {
            return Err(DatasetError::MalformedLine { line: line_no });
        }
        let phase = rest.parse::<Phase>().map_err(|e| DatasetError::UnknownPhase {
            line: line_no,
            name: e.0,
        })?;
        rows.push((line_no, frame, phase));
    }
    if rows.is_empty() {
        let line = text.lines().count().max(1);
        return Err(DatasetError::MalformedLine { line });
    }
    if rows[0].1 != 0 {
        return Err(DatasetError::NonContiguousFrames { frame: rows[0].1 });
    }

    let mut runs: Vec<PhaseRun> = Vec::new();
    let mut prev = 0u64;
    let last_row = rows.len() - 1;
    for (k, &(_, frame, phase)) in rows.iter().enumerate() {
        if frame > u32::MAX as u64 {
            return Err(DatasetError::NonContiguousFrames { frame });
        }
        let f = frame as u32;
        if k == 0 {
            runs.push(PhaseRun {
                start: 0,
                end: 0,
                phase,
            });
            continue;
        }
        if frame <= prev {
            return Err(DatasetError::NonContiguousFrames { frame });
        }
        let current = runs.last_mut().expect("first row pushed a run");
        if current.phase == phase {
            if frame > prev + 1 && k != last_row {
                return Err(DatasetError::NonContiguousFrames { frame: prev + 1 });
            }
            current.end = f;
        } else {
            current.end = f - 1;
            runs.push(PhaseRun {
                start: f,
                end: f,
                phase,
            });
        }
        prev = frame;
    }
    AnnotationTimeline::from_runs(video_id, fps, runs)
}

/// Loads every `*.txt` annotation file in `dir`, sorted by file name; the file
/// stem becomes the video id.
pub fn load_annotation_dir(dir: &Path, fps: u32) -> Result<Vec<AnnotationTimeline>, DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(io_err)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(DatasetError::EmptyCorpus);
    }
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|source| DatasetError::Io {
                path: p.display().to_string(),
                source,
            })?;
            let id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            parse_annotations(&text, &id, fps)
        })
        .collect()
}
