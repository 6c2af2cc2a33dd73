use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::{LocalMaximum, SaliencyError};

/// Square crop window inside a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub top_left_x: u32,
    pub top_left_y: u32,
    pub side: u32,
}

impl PatchSpec {
    pub fn fits(&self, width: u32, height: u32) -> bool {
        self.side <= width
            && self.side <= height
            && self.top_left_x <= width - self.side
            && self.top_left_y <= height - self.side
    }
}

/// Centers a `side`-pixel patch on the mean maximum location and shifts it
/// back inside the frame when it would overhang. No maxima means the frame
/// center.
pub fn select_patch(
    maxima: &[LocalMaximum],
    frame_width: u32,
    frame_height: u32,
    side: u32,
) -> Result<PatchSpec, SaliencyError> {
    if side == 0 || side > frame_width || side > frame_height {
        return Err(SaliencyError::PatchLargerThanFrame {
            side,
            width: frame_width,
            height: frame_height,
        });
    }
    let (cx, cy) = if maxima.is_empty() {
        ((frame_width / 2) as i64, (frame_height / 2) as i64)
    } else {
        let n = maxima.len() as f64;
        let mx = maxima.iter().map(|m| m.x as f64).sum::<f64>() / n;
        let my = maxima.iter().map(|m| m.y as f64).sum::<f64>() / n;
        (mx.round() as i64, my.round() as i64)
    };
    let half = (side / 2) as i64;
    let clamp = |c: i64, dim: u32| (c - half).clamp(0, (dim - side) as i64) as u32;
    Ok(PatchSpec {
        top_left_x: clamp(cx, frame_width),
        top_left_y: clamp(cy, frame_height),
        side,
    })
}

/// Exact pixel copy of the patch.
pub fn crop_impl(frame: &RgbImage, patch: &PatchSpec) -> Result<RgbImage, SaliencyError> {
    if !patch.fits(frame.width(), frame.height()) {
        return Err(SaliencyError::OutOfBounds);
    }
    Ok(image::imageops::crop_imm(frame, patch.top_left_x, patch.top_left_y, patch.side, patch.side)
        .to_image())
}
