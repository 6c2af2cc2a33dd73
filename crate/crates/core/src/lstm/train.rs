use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cell::batch_loss;
use super::{adam_step, lstm_backward, predict, AdamConfig, AdamState, LstmError, LstmModel, Split};
use crate::dataset::Shot;
use crate::features::FeatureCache;
use crate::metrics::{ConfusionMatrix, MetricRow, Metrics};
use crate::{par, Phase};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    pub cycles: usize,
    pub train_per_class: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 200,
            batch_size: 16,
            epochs: 80,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 7,
            cycles: 5,
            train_per_class: 25,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }

    pub fn validate(&self) -> Result<(), LstmError> {
        let bad = |m: &str| Err(LstmError::InvalidConfig(m.into()));
        if self.hidden == 0 || self.batch_size == 0 || self.epochs == 0 || self.cycles == 0 || self.train_per_class == 0 {
            return bad("hidden, batch_size, epochs, cycles and train_per_class must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if !(self.adam_epsilon > 0.0) {
            return bad("adam_epsilon must be positive");
        }
        Ok(())
    }
}

/// Equal-length `T x D` input sequences with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSet {
    pub sequences: Vec<Array2<f64>>,
    pub labels: Vec<Phase>,
    pub shots: Vec<Shot>,
}

impl SequenceSet {
    pub fn new(sequences: Vec<Array2<f64>>, labels: Vec<Phase>, shots: Vec<Shot>) -> Result<Self, LstmError> {
        if sequences.len() != labels.len() || sequences.len() != shots.len() {
            return Err(LstmError::InvalidBatch("sequences, labels and shots differ in count".into()));
        }
        if let Some(first) = sequences.first() {
            if first.nrows() == 0 {
                return Err(LstmError::EmptySequence);
            }
            if let Some(s) = sequences.iter().find(|s| s.dim() != first.dim()) {
                return Err(LstmError::InvalidBatch(format!(
                    "sequence shape {:?} differs from {:?}",
                    s.dim(),
                    first.dim()
                )));
            }
        }
        Ok(SequenceSet {
            sequences,
            labels,
            shots,
        })
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.sequences.first().map_or(0, |s| s.ncols())
    }

    pub fn steps(&self) -> usize {
        self.sequences.first().map_or(0, |s| s.nrows())
    }

    fn views(&self, idx: &[usize]) -> (Vec<ArrayView2<'_, f64>>, Vec<Phase>) {
        (idx.iter().map(|&i| self.sequences[i].view()).collect(), idx.iter().map(|&i| self.labels[i]).collect())
    }
}

/// One row per sampled frame; with `time_scale`, each row gains the frame's
/// elapsed minutes divided by it.
pub fn sequences_from_cache(cache: &FeatureCache, time_scale: Option<f64>) -> Result<SequenceSet, LstmError> {
    let extra = usize::from(time_scale.is_some());
    let width = cache.descriptor_dim as usize + extra;
    let mut sequences = Vec::with_capacity(cache.sequences.len());
    for seq in &cache.sequences {
        let mut x = Array2::zeros((seq.entries.len(), width));
        for (mut row, entry) in x.rows_mut().into_iter().zip(&seq.entries) {
            for (dst, &v) in row.iter_mut().zip(&entry.descriptor) {
                *dst = v as f64;
            }
            if let Some(scale) = time_scale {
                row[width - 1] = entry.elapsed_minutes / scale;
            }
        }
        sequences.push(x);
    }
    SequenceSet::new(
        sequences,
        cache.sequences.iter().map(|s| s.shot.phase).collect(),
        cache.sequences.iter().map(|s| s.shot.clone()).collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: LstmModel,
    pub config: TrainConfig,
    pub cycle: usize,
    /// Mean training loss before the first update.
    pub initial_loss: f64,
    /// Mean training loss of each epoch.
    pub loss_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleResult {
    pub split: Split,
    /// Predictions for `split.test`, in order.
    pub predictions: Vec<Phase>,
    pub metrics: Metrics,
    pub trained: TrainedModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub cycles: Vec<CycleResult>,
    pub mean: MetricRow,
    pub std: MetricRow,
    /// Test confusion pooled over all cycles.
    pub pooled: ConfusionMatrix,
}

fn mean_loss(model: &LstmModel, set: &SequenceSet, idx: &[usize], batch: usize) -> Result<f64, LstmError> {
    let mut total = 0.0;
    for chunk in idx.chunks(batch) {
        let (views, labels) = set.views(chunk);
        total += batch_loss(model, &views, &labels)? * chunk.len() as f64;
    }
    Ok(total / idx.len() as f64)
}

/// Predicted phases for the listed sequences.
pub fn evaluate(model: &LstmModel, set: &SequenceSet, idx: &[usize]) -> Result<Vec<Phase>, LstmError> {
    idx.iter().map(|&i| predict(model, set.sequences[i].view()).map(|(_, p)| p)).collect()
}

/// Trains one model on `split.train` and scores it on `split.test`.
pub fn train_cycle(set: &SequenceSet, split: &Split, config: &TrainConfig, cycle: usize) -> Result<CycleResult, LstmError> {
    config.validate()?;
    if split.train.is_empty() || split.test.is_empty() {
        return Err(LstmError::InvalidBatch("split has an empty side".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(cycle as u64);
    let mut model = LstmModel::init(set.input_dim(), config.hidden, &mut rng);
    let shapes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    let mut adam = AdamState::new(&shapes);
    let adam_cfg = config.adam();

    let initial_loss = mean_loss(&model, set, &split.train, config.batch_size)?;
    let mut order = split.train.clone();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (batch, chunk) in order.chunks(config.batch_size).enumerate() {
            let (views, labels) = set.views(chunk);
            let (grad, loss) = lstm_backward(&model, &views, &labels).map_err(|e| match e {
                LstmError::NonFiniteLoss { loss, .. } => LstmError::NonFiniteLoss {
                    cycle,
                    epoch,
                    batch,
                    loss,
                },
                other => other,
            })?;
            let grads = grad.tensors();
            adam_step(&mut model.tensors_mut(), &grads, &mut adam, &adam_cfg);
            total += loss * chunk.len() as f64;
        }
        loss_trace.push(total / order.len() as f64);
    }

    let predictions = evaluate(&model, set, &split.test)?;
    let truths: Vec<Phase> = split.test.iter().map(|&i| set.labels[i]).collect();
    let metrics = crate::metrics::metrics(&predictions, &truths)
        .map_err(|e| LstmError::InvalidBatch(e.to_string()))?;
    Ok(CycleResult {
        split: split.clone(),
        predictions,
        metrics,
        trained: TrainedModel {
            model,
            config: *config,
            cycle,
            initial_loss,
            loss_trace,
        },
    })
}

/// Trains every split. Cycles run concurrently; each has its own random stream.
pub fn train(set: &SequenceSet, splits: &[Split], config: &TrainConfig) -> Result<TrainOutcome, LstmError> {
    config.validate()?;
    let cycles = par::try_map_range(splits.len(), |k| train_cycle(set, &splits[k], config, k))?;
    let rows: Vec<MetricRow> = cycles.iter().map(|c| c.metrics.macro_row).collect();
    let (mean, std) = MetricRow::mean_std(&rows);
    let mut pooled = ConfusionMatrix::default();
    cycles.iter().for_each(|c| pooled.merge(&c.metrics.confusion));
    Ok(TrainOutcome {
        cycles,
        mean,
        std,
        pooled,
    })
}
