//! Local differential privacy defense for motion streams.
//!
//! Height and wingspan are the privacy-sensitive dimensions. For each
//! session a fake value of each is drawn once from a bounded Laplace
//! mechanism centered on the true value, and every frame is rewritten by two
//! positive scalings so that an observer's estimators read the fake values:
//!
//! 1. all `y` coordinates are scaled by `g = fake_height / true_height`
//!    about the floor;
//! 2. each hand is scaled about the (already scaled) head by
//!    `s = fake_wingspan / true_wingspan`.
//!
//! Orientations and timestamps pass through untouched.

mod audit;
mod config;
mod defense;
mod laplace;

pub use audit::{audit_dp_ratio, audit_mechanism, AuditResult, MIN_AUDIT_SAMPLES};
pub use config::{Bounds, EpsilonConfig, PrivacyConfigFile};
pub use defense::{
    apply_defense_frame, defend_recording, derive_defense_params, mean_displacement,
    DefendedRecording, DefenseParams,
};
pub use laplace::{sample_bounded_laplace, sample_laplace, BoundedLaplace, MAX_REJECTIONS};

use thiserror::Error;

use crate::features::FeatureError;

pub const DEFAULT_HEIGHT_BOUNDS: (f64, f64) = (1.50, 1.95);
pub const DEFAULT_WINGSPAN_BOUNDS: (f64, f64) = (1.45, 2.05);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrivacyError {
    #[error("value {value} outside bounds [{lo}, {hi}]")]
    ValueOutOfBounds { value: f64, lo: f64, hi: f64 },
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("bounds [{0}, {1}] are degenerate")]
    InvalidBounds(f64, f64),
    #[error("audit needs at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}
