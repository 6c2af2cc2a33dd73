//! Single-layer LSTM shot classifier trained from scratch.

mod adam;
mod cell;
mod file;
mod splits;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use cell::{lstm_backward, lstm_forward, predict, ClassifierHead, LstmModel, LstmOutput, LstmParams};
pub use file::{read_model, write_model, ModelFile, ModelMeta, ShotRef, MODEL_MAGIC, MODEL_VERSION};
pub use splits::{make_splits, Split};
pub use train::{
    evaluate, sequences_from_cache, train, train_cycle, CycleResult, SequenceSet, TrainConfig, TrainOutcome, TrainedModel,
};

#[derive(Debug, thiserror::Error)]
pub enum LstmError {
    #[error("input has {got} values per step, model expects {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("sequence is empty")]
    EmptySequence,
    #[error("{0}")]
    InvalidBatch(String),
    #[error("loss became non-finite in cycle {cycle}, epoch {epoch}, batch {batch} (loss {loss})")]
    NonFiniteLoss {
        cycle: usize,
        epoch: usize,
        batch: usize,
        loss: f64,
    },
    #[error("phase {phase} has {available} shots, need at least {required}")]
    InsufficientShots {
        phase: crate::Phase,
        available: usize,
        required: usize,
    },
    #[error("no split of phase {phase} covers every shot after {attempts} attempts")]
    CoverageUnreachable { phase: crate::Phase, attempts: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model file version {0}")]
    VersionMismatch(u32),
    #[error("model file is truncated")]
    Truncated,
    #[error("model file trailer: {0}")]
    Trailer(#[from] serde_json::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
