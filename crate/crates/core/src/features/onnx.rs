use std::path::Path;
use std::sync::Arc;

use tract_onnx::prelude::*;

use super::{Backbone, BackboneSpec, FeatureError, FeatureProvider, ImageTensor, ProviderManifest};

/// Pretrained backbone exported to ONNX, truncated at its descriptor layer.
pub struct RuntimeProvider {
    backbone: Backbone,
    manifest: ProviderManifest,
    plan: Arc<TypedRunnableModel>,
}

impl RuntimeProvider {
    /// Loads `path` and cuts the graph at the backbone's layer.
    ///
    /// Exports that rename layers can pass `output_name` instead.
    pub fn load(path: &Path, backbone: Backbone, output_name: Option<&str>) -> Result<Self, FeatureError> {
        let spec = backbone.spec();
        let side = spec.input_side as usize;
        let fail = |e: TractError| FeatureError::ProviderFailure(format!("{}: {e:#}", path.display()));
        let mut model = tract_onnx::onnx()
            .model_for_path(path)
            .map_err(fail)?
            .with_input_fact(0, f32::fact([1, 3, side, side]).into())
            .map_err(fail)?;
        model
            .select_outputs_by_name([output_name.unwrap_or(spec.layer_id)])
            .map_err(fail)?;
        let plan = model.into_optimized().map_err(fail)?.into_runnable().map_err(fail)?;
        Ok(RuntimeProvider {
            backbone,
            manifest: ProviderManifest::IMAGENET,
            plan,
        })
    }
}

impl FeatureProvider for RuntimeProvider {
    fn name(&self) -> String {
        format!("onnx:{}", self.backbone.name())
    }

    fn manifest(&self) -> &ProviderManifest {
        &self.manifest
    }

    fn describe(&self, backbone: &BackboneSpec, input: &ImageTensor) -> Result<Vec<f32>, FeatureError> {
        if backbone.backbone != self.backbone {
            return Err(FeatureError::InvalidArgument(format!(
                "model was loaded for {}, not {}",
                self.backbone.name(),
                backbone.backbone.name()
            )));
        }
        let side = input.side as usize;
        let fail = |e: TractError| FeatureError::ProviderFailure(format!("{e:#}"));
        let tensor = Tensor::from_shape(&[1, 3, side, side], &input.data).map_err(fail)?;
        let outputs = self.plan.run(tvec!(tensor.into())).map_err(fail)?;
        let view = outputs[0].to_plain_array_view::<f32>().map_err(fail)?;
        Ok(view.iter().copied().collect())
    }
}
