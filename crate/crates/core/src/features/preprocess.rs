use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use image::RgbImage;

use super::{BackboneSpec, FeatureError, ReceptiveFieldMode};
use crate::saliency::{
    crop, resize_keep_aspect, resize_square, select_patch, top_local_maxima, LogGaborBankConfig, PatchSpec,
    SaliencyModel,
};

/// Number of saliency maxima averaged to place a patch.
pub const PATCH_MAXIMA: usize = 5;
/// Window side used for the maxima search.
pub const MAXIMA_NEIGHBORHOOD: usize = 9;
/// Maxima weaker than one 8-bit grey level of the normalized map are ripple,
/// not structure, and do not steer the patch.
pub const MIN_PATCH_MAXIMUM: f64 = 1.0 / 255.0;

/// Turns frames into backbone-sized inputs, caching saliency models per
/// resized frame size.
pub struct Preprocessor {
    mode: ReceptiveFieldMode,
    backbone: BackboneSpec,
    saliency: LogGaborBankConfig,
    models: Mutex<HashMap<(u32, u32), Arc<SaliencyModel>>>,
}

impl Preprocessor {
    pub fn new(mode: ReceptiveFieldMode, backbone: BackboneSpec, saliency: LogGaborBankConfig) -> Self {
        Preprocessor {
            mode,
            backbone,
            saliency,
            models: Mutex::new(HashMap::new()),
        }
    }

    fn model(&self, width: u32, height: u32) -> Result<Arc<SaliencyModel>, FeatureError> {
        let mut cache = self.models.lock().expect("saliency model cache poisoned");
        if let Some(m) = cache.get(&(width, height)) {
            return Ok(Arc::clone(m));
        }
        let m = Arc::new(SaliencyModel::new(self.saliency, width, height)?);
        cache.insert((width, height), Arc::clone(&m));
        Ok(m)
    }

    /// Backbone input and, in salient mode, the chosen patch.
    pub fn run(&self, frame: &RgbImage) -> Result<(RgbImage, Option<PatchSpec>), FeatureError> {
        let side = self.backbone.input_side;
        match self.mode {
            ReceptiveFieldMode::ResizeSquare => Ok((resize_square(frame, side)?, None)),
            ReceptiveFieldMode::SalientPatch => {
                let resized = resize_keep_aspect(frame, side)?;
                let map = self.model(resized.width(), resized.height())?.compute(&resized)?;
                let mut maxima = top_local_maxima(&map, PATCH_MAXIMA, MAXIMA_NEIGHBORHOOD)?;
                maxima.retain(|m| m.value >= MIN_PATCH_MAXIMUM);
                let patch = select_patch(&maxima, resized.width(), resized.height(), side)?;
                Ok((crop(&resized, &patch)?, Some(patch)))
            }
        }
    }
}

/// Produces the `input_side x input_side` backbone input for one frame.
pub fn preprocess(
    frame: &RgbImage,
    mode: ReceptiveFieldMode,
    backbone: &BackboneSpec,
    saliency: &LogGaborBankConfig,
) -> Result<RgbImage, FeatureError> {
    Preprocessor::new(mode, *backbone, *saliency).run(frame).map(|(img, _)| img)
}
