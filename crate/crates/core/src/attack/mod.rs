//! Identification and attribute-inference attacks.
//!
//! Identification trains a gallery model on per-window feature vectors of
//! one session per user, then labels anonymous chunks from another session
//! by majority vote over their windows.

mod eval;
mod inference;
mod model;

pub use eval::{
    aggregate_votes, evaluate_identification, evaluate_identification_with_truth, identify_chunk,
    ChunkVerdict, ConfusedPair, EvalReport, Protocol, UserTally,
};
pub use inference::{evaluate_inference, pearson, Attribute, InferenceReport};
pub use model::{
    predict_window, train_model, IdModel, ModelKind, ModelParams, Prediction, Standardizer,
    MIN_WINDOWS_PER_LABEL, MODEL_SCHEMA, STD_FLOOR, VARIANCE_FLOOR,
};

use thiserror::Error;

use crate::features::FeatureError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("need at least 2 labels, got {0}")]
    TooFewLabels(usize),
    #[error("label {label} has {count} windows, need at least {MIN_WINDOWS_PER_LABEL}")]
    TooFewWindows { label: String, count: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("recording {0} yields no complete window in the requested span")]
    TooShort(String),
    #[error("chunk of {chunk_s} s is shorter than the {window_s} s window")]
    ChunkShorterThanWindow { chunk_s: f64, window_s: f64 },
    #[error("empty test set")]
    EmptyTestSet,
    #[error("no ground truth for user {0}")]
    MissingGroundTruth(String),
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}
