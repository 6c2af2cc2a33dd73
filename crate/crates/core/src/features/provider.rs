use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::{BackboneSpec, FeatureError};

/// Per-channel normalization constants a provider expects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProviderManifest {
    pub mean: [f32; 3],
    pub std: [f32; 3],
}

impl ProviderManifest {
    /// ImageNet statistics used by torchvision-style pretrained weights.
    pub const IMAGENET: ProviderManifest = ProviderManifest {
        mean: [0.485, 0.456, 0.406],
        std: [0.229, 0.224, 0.225],
    };
}

/// Normalized planar (CHW) image tensor of a square input.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    pub side: u32,
    pub data: Vec<f32>,
}

impl ImageTensor {
    pub fn zeros(side: u32) -> Self {
        ImageTensor {
            side,
            data: vec![0.0; 3 * side as usize * side as usize],
        }
    }

    pub fn from_image(image: &RgbImage, manifest: &ProviderManifest) -> Self {
        let side = image.width();
        let plane = side as usize * image.height() as usize;
        let mut data = vec![0.0f32; 3 * plane];
        for (i, px) in image.pixels().enumerate() {
            for c in 0..3 {
                data[c * plane + i] = (px[c] as f32 / 255.0 - manifest.mean[c]) / manifest.std[c];
            }
        }
        ImageTensor { side, data }
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let plane = self.side as usize * self.side as usize;
        &self.data[c * plane..(c + 1) * plane]
    }
}

/// Maps a normalized input tensor to the named layer's activations.
pub trait FeatureProvider: Sync {
    fn name(&self) -> String;

    fn manifest(&self) -> &ProviderManifest;

    fn describe(&self, backbone: &BackboneSpec, input: &ImageTensor) -> Result<Vec<f32>, FeatureError>;
}

/// Descriptor of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDescriptor {
    pub values: Vec<f32>,
}

/// Normalizes a backbone-sized image and runs the provider on it.
pub fn extract_descriptor(
    image: &RgbImage,
    backbone: &BackboneSpec,
    provider: &dyn FeatureProvider,
) -> Result<FrameDescriptor, FeatureError> {
    if image.width() != backbone.input_side || image.height() != backbone.input_side {
        return Err(FeatureError::InvalidArgument(format!(
            "{} expects {side}x{side} input, got {}x{}",
            backbone.backbone.name(),
            image.width(),
            image.height(),
            side = backbone.input_side
        )));
    }
    let tensor = ImageTensor::from_image(image, provider.manifest());
    let values = provider.describe(backbone, &tensor)?;
    if values.len() != backbone.descriptor_dim {
        return Err(FeatureError::DimensionMismatch {
            got: values.len(),
            want: backbone.descriptor_dim,
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(FeatureError::ProviderFailure(format!(
            "{} returned a non-finite activation at index {i}",
            provider.name()
        )));
    }
    Ok(FrameDescriptor { values })
}
