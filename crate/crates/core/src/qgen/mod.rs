//! Graph-to-sequence question generation: content selection, an
//! attention decoder with copying and coverage, joint training,
//! decoding, BLEU and graph-attention analysis.

pub mod analysis;
pub mod bleu;
pub mod checkpoint;
pub mod data;
pub mod generate;
pub mod model;
pub mod train;
pub mod vocab;

use thiserror::Error;

use crate::encoders::EncoderError;
use crate::numerics::NumericsError;

pub use analysis::{attention_stats, entropy, node_scores, relevance_ratio, AttentionScope, AttentionStats};
pub use bleu::{corpus_bleu, sentence_bleu};
pub use checkpoint::Checkpoint;
pub use data::{Example, Prepared};
pub use generate::{generate, Hypothesis};
pub use model::{coverage_loss, content_select_loss, DecoderState, ExampleLoss, LossWeights, ModelConfig, QgModel, StepOutput};
pub use train::{evaluate, train, EpochMetrics, Evaluation, TrainConfig, TrainOutcome};
pub use vocab::Vocabulary;

#[derive(Debug, Error)]
pub enum QgError {
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("answer is empty after tokenization")]
    EmptyAnswer,
    #[error("example has no gold question")]
    MissingQuestion,
    #[error("node {node} has no relevance label")]
    MissingLabels { node: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training diverged in epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
