//! Surgical phase recognition from short laparoscopic video shots.

pub mod dataset;
pub mod features;
pub mod lstm;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod phase;
pub mod pooling;
pub mod saliency;
pub mod synth;

pub use phase::{Phase, NUM_PHASES};
