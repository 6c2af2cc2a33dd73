use std::path::{Path, PathBuf};

use image::RgbImage;

use super::FeatureError;

/// Random access to decoded video frames.
pub trait FrameSource: Sync {
    fn read_frame(&self, video_id: &str, frame_index: u32) -> Result<RgbImage, FeatureError>;
}

/// Pre-decoded frames stored as `<root>/<video_id>/%08d.png`.
#[derive(Debug, Clone)]
pub struct FrameDirectory {
    root: PathBuf,
}

impl FrameDirectory {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FrameDirectory { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn frame_path(&self, video_id: &str, frame_index: u32) -> PathBuf {
        self.root.join(video_id).join(format!("{frame_index:08}.png"))
    }

    pub fn write_frame(&self, video_id: &str, frame_index: u32, frame: &RgbImage) -> Result<(), FeatureError> {
        let path = self.frame_path(video_id, frame_index);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| FeatureError::io(dir, e))?;
        }
        frame
            .save_with_format(&path, image::ImageFormat::Png)
            .map_err(|e| FeatureError::DecodeFailure(format!("{}: {e}", path.display())))
    }
}

impl FrameSource for FrameDirectory {
    fn read_frame(&self, video_id: &str, frame_index: u32) -> Result<RgbImage, FeatureError> {
        let path = self.frame_path(video_id, frame_index);
        if !path.is_file() {
            return Err(FeatureError::FrameMissing {
                video_id: video_id.to_string(),
                index: frame_index,
            });
        }
        image::open(&path)
            .map(|img| img.to_rgb8())
            .map_err(|e| FeatureError::DecodeFailure(format!("{}: {e}", path.display())))
    }
}
