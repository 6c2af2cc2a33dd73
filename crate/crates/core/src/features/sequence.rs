use serde::{Deserialize, Serialize};

use super::{extract_descriptor, FeatureError, FeatureProvider, FrameSource, Preprocessor};
use crate::dataset::Shot;
use crate::par;

/// One sampled frame of a shot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceEntry {
    /// Offset from the shot's first frame.
    pub frame_offset: u32,
    /// Minutes from the operation start to this frame.
    pub elapsed_minutes: f64,
    pub descriptor: Vec<f32>,
}

/// Per-frame descriptors of a shot in temporal order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotDescriptorSequence {
    pub shot: Shot,
    pub stride: u32,
    pub entries: Vec<SequenceEntry>,
}

impl ShotDescriptorSequence {
    pub fn descriptor_dim(&self) -> usize {
        self.entries.first().map_or(0, |e| e.descriptor.len())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Frame offsets visited for a shot of `num_frames` at `stride`.
pub fn sample_offsets(num_frames: u32, stride: u32) -> impl Iterator<Item = u32> {
    (0..num_frames).step_by(stride.max(1) as usize)
}

/// Descriptors of frames `start, start + stride, ...` of the shot.
///
/// Frames are processed concurrently and assembled in offset order.
pub fn extract_sequence(
    shot: &Shot,
    frames: &dyn FrameSource,
    preprocessor: &Preprocessor,
    backbone: &super::BackboneSpec,
    provider: &dyn FeatureProvider,
    stride: u32,
    fps: u32,
) -> Result<ShotDescriptorSequence, FeatureError> {
    if stride == 0 {
        return Err(FeatureError::InvalidArgument("stride must be positive".into()));
    }
    let offsets: Vec<u32> = sample_offsets(shot.num_frames, stride).collect();
    let frames_per_minute = fps as f64 * 60.0;
    let entries = par::try_map_range(offsets.len(), |i| -> Result<SequenceEntry, FeatureError> {
        let offset = offsets[i];
        let index = shot.start_frame + offset;
        let frame = frames.read_frame(&shot.video_id, index)?;
        let (input, _) = preprocessor.run(&frame)?;
        let descriptor = extract_descriptor(&input, backbone, provider)?;
        Ok(SequenceEntry {
            frame_offset: offset,
            elapsed_minutes: index as f64 / frames_per_minute,
            descriptor: descriptor.values,
        })
    })?;
    Ok(ShotDescriptorSequence {
        shot: shot.clone(),
        stride,
        entries,
    })
}
