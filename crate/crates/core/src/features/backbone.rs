use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Pretrained networks whose before-final fully connected activations serve
/// as frame descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backbone {
    Alexnet,
    Vgg19,
    Googlenet,
    Resnet101,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BackboneSpec {
    pub backbone: Backbone,
    pub input_side: u32,
    pub descriptor_dim: usize,
    pub layer_id: &'static str,
}

impl Backbone {
    pub const ALL: [Backbone; 4] = [
        Backbone::Alexnet,
        Backbone::Vgg19,
        Backbone::Googlenet,
        Backbone::Resnet101,
    ];

    pub fn spec(self) -> BackboneSpec {
        let (input_side, descriptor_dim, layer_id) = match self {
            Backbone::Alexnet => (227, 4096, "fc7"),
            Backbone::Vgg19 => (224, 4096, "fc7"),
            Backbone::Googlenet => (224, 1024, "pool5-7x7_s1"),
            Backbone::Resnet101 => (224, 2048, "pool5"),
        };
        BackboneSpec {
            backbone: self,
            input_side,
            descriptor_dim,
            layer_id,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Backbone::Alexnet => "alexnet",
            Backbone::Vgg19 => "vgg19",
            Backbone::Googlenet => "googlenet",
            Backbone::Resnet101 => "resnet101",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Backbone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backbone {
    type Err = super::FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Backbone::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| super::FeatureError::UnknownBackbone(s.to_string()))
    }
}

/// How the backbone's square input is cut from a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceptiveFieldMode {
    /// Warp the whole frame to the input size.
    ResizeSquare,
    /// Crop the most salient square after an aspect-preserving resize.
    SalientPatch,
}

impl FromStr for ReceptiveFieldMode {
    type Err = super::FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "resize_square" | "resize-square" => Ok(ReceptiveFieldMode::ResizeSquare),
            "salient_patch" | "salient-patch" => Ok(ReceptiveFieldMode::SalientPatch),
            other => Err(super::FeatureError::InvalidArgument(format!(
                "unknown receptive field mode `{other}`"
            ))),
        }
    }
}

impl fmt::Display for ReceptiveFieldMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReceptiveFieldMode::ResizeSquare => "resize_square",
            ReceptiveFieldMode::SalientPatch => "salient_patch",
        })
    }
}
