//! Experiment runner: synth, features, attack and defense wired into one
//! reproducible report.

mod config;
mod report;
mod run;

pub use config::{format_eps, ExperimentConfig};
pub use report::{
    write_report, AuditRow, ExperimentReport, IdentificationRow, InferenceRow, ReportFormat, UtilityRow,
    CSV_HEADER, REPORT_JSON_SCHEMA, REPORT_SCHEMA,
};
pub use run::{run_experiment, wilson_interval};

use thiserror::Error;

use crate::attack::AttackError;
use crate::features::FeatureError;
use crate::privacy::PrivacyError;
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("report: {0}")]
    Report(String),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Whether the failure stems from user configuration rather than a
    /// runtime fault.
    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config(_))
            || matches!(
                self,
                HarnessError::Privacy(
                    PrivacyError::Config(_)
                        | PrivacyError::InvalidEpsilon(_)
                        | PrivacyError::InvalidBounds { .. }
                )
            )
    }
}
