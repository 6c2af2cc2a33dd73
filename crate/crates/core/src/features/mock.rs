use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Backbone, BackboneSpec, FeatureError, FeatureProvider, ImageTensor, ProviderManifest};

/// Side of the pooled grid the mock projects from.
pub const MOCK_GRID: usize = 16;
const MOCK_INPUTS: usize = MOCK_GRID * MOCK_GRID * 3;

struct Projection {
    /// Row-major `descriptor_dim x MOCK_INPUTS`.
    weights: Vec<f32>,
    bias: Vec<f32>,
}

/// Deterministic stand-in for a pretrained network.
///
/// The normalized input is box-averaged to a 16x16x3 grid, flattened,
/// multiplied by a seeded random matrix, offset by a seeded non-negative bias
/// and rectified.
pub struct MockProvider {
    seed: u64,
    projections: [OnceLock<Projection>; 4],
}

impl MockProvider {
    pub fn new(seed: u64) -> Self {
        MockProvider {
            seed,
            projections: Default::default(),
        }
    }

    fn projection(&self, backbone: &BackboneSpec) -> &Projection {
        self.projections[backbone.backbone.index()].get_or_init(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                self.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(backbone.backbone.index() as u64 + 1)),
            );
            let limit = (3.0 / MOCK_INPUTS as f32).sqrt();
            let weights = (0..backbone.descriptor_dim * MOCK_INPUTS)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            let bias = (0..backbone.descriptor_dim)
                .map(|_| rng.random_range(0.0..0.1f32))
                .collect();
            Projection { weights, bias }
        })
    }

    /// The bias vector of `backbone`; the response to an all-zero tensor.
    pub fn bias(&self, backbone: Backbone) -> Vec<f32> {
        self.projection(&backbone.spec()).bias.clone()
    }
}

/// Box average of each channel onto a `MOCK_GRID x MOCK_GRID` grid.
fn pool_grid(input: &ImageTensor) -> Vec<f32> {
    let side = input.side as usize;
    let mut out = Vec::with_capacity(MOCK_INPUTS);
    for c in 0..3 {
        let ch = input.channel(c);
        for gy in 0..MOCK_GRID {
            let (y0, y1) = (gy * side / MOCK_GRID, ((gy + 1) * side / MOCK_GRID).max(gy * side / MOCK_GRID + 1));
            for gx in 0..MOCK_GRID {
                let (x0, x1) = (gx * side / MOCK_GRID, ((gx + 1) * side / MOCK_GRID).max(gx * side / MOCK_GRID + 1));
                let mut sum = 0.0f32;
                for y in y0..y1 {
                    sum += ch[y * side + x0..y * side + x1].iter().sum::<f32>();
                }
                out.push(sum / ((y1 - y0) * (x1 - x0)) as f32);
            }
        }
    }
    out
}

impl FeatureProvider for MockProvider {
    fn name(&self) -> String {
        format!("mock(seed={})", self.seed)
    }

    fn manifest(&self) -> &ProviderManifest {
        &ProviderManifest::IMAGENET
    }

    fn describe(&self, backbone: &BackboneSpec, input: &ImageTensor) -> Result<Vec<f32>, FeatureError> {
        if input.side == 0 || input.data.len() != 3 * (input.side as usize).pow(2) {
            return Err(FeatureError::ProviderFailure("malformed input tensor".into()));
        }
        let x = pool_grid(input);
        let p = self.projection(backbone);
        Ok(p.weights
            .chunks_exact(MOCK_INPUTS)
            .zip(&p.bias)
            .map(|(row, b)| (row.iter().zip(&x).map(|(w, v)| w * v).sum::<f32>() + b).max(0.0))
            .collect())
    }
}
