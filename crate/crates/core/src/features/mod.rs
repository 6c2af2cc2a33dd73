//! Per-frame descriptors from a pluggable pretrained-backbone provider.

mod backbone;
pub mod cache;
mod frames;
mod mock;
#[cfg(feature = "onnx")]
mod onnx;
mod preprocess;
mod provider;
mod sequence;

pub use backbone::{Backbone, BackboneSpec, ReceptiveFieldMode};
pub use cache::{read_cache, write_cache, FeatureCache};
pub use frames::{FrameDirectory, FrameSource};
pub use mock::MockProvider;
#[cfg(feature = "onnx")]
pub use onnx::RuntimeProvider;
pub use preprocess::{preprocess, Preprocessor, MIN_PATCH_MAXIMUM};
pub use provider::{extract_descriptor, FeatureProvider, FrameDescriptor, ImageTensor, ProviderManifest};
pub use sequence::{extract_sequence, sample_offsets, SequenceEntry, ShotDescriptorSequence};

use std::path::Path;

use crate::saliency::SaliencyError;

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("frame {index} of video `{video_id}` is missing")]
    FrameMissing { video_id: String, index: u32 },
    #[error("cannot decode frame: {0}")]
    DecodeFailure(String),
    #[error("feature provider failed: {0}")]
    ProviderFailure(String),
    #[error("descriptor has {got} values, expected {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("unknown backbone `{0}`")]
    UnknownBackbone(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Saliency(#[from] SaliencyError),
    #[error("not a feature cache (bad magic)")]
    BadMagic,
    #[error("unsupported feature cache version {found}")]
    VersionMismatch { found: u32 },
    #[error("feature cache is truncated")]
    TruncatedFile,
    #[error("feature cache is corrupt: {0}")]
    CorruptCache(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FeatureError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        FeatureError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
