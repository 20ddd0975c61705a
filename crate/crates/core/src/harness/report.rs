use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{eps, format_eps, ExperimentConfig};
use super::HarnessError;
use crate::attack::{Attribute, InferenceReport};

pub const REPORT_SCHEMA: &str = "motion-privacy/experiment-report/v1";

/// JSON Schema for [`ExperimentReport`] documents.
pub const REPORT_JSON_SCHEMA: &str = include_str!("../../schema/experiment-report.schema.json");

/// Identification at one (budget, chunk length) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationRow {
    #[serde(with = "eps")]
    pub eps: f64,
    pub chunk_s: f64,
    pub chunks: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Wilson score 95% interval.
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Attribute inference on the test sessions at one budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceRow {
    #[serde(with = "eps")]
    pub eps: f64,
    pub height: InferenceReport,
    pub wingspan: InferenceReport,
    pub handedness: InferenceReport,
    pub tempo: InferenceReport,
    /// Height estimate against the session's fake height.
    pub fake_height_mae: f64,
    pub fake_height_max_err: f64,
    pub fake_wingspan_mae: f64,
    pub fake_wingspan_max_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityRow {
    #[serde(with = "eps")]
    pub eps: f64,
    /// Mean positional displacement over all poses of the test sessions, m.
    pub mean_displacement_m: f64,
}

/// Empirical privacy loss of one attribute's mechanism at one budget,
/// measured between the two ends of its bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub eps: f64,
    pub attribute: Attribute,
    pub samples: usize,
    pub bins: usize,
    pub nominal_eps: f64,
    /// Worst per-bin log ratio of the two output histograms.
    pub audited_eps: f64,
    pub slack: f64,
    pub passes: bool,
}

/// Full experiment output. Contains no timing, so equal configs give
/// byte-identical documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub toolkit_version: String,
    pub config: ExperimentConfig,
    pub population: usize,
    /// Accuracy of a uniform guess, `1 / population`.
    pub chance: f64,
    pub identification: Vec<IdentificationRow>,
    pub inference: Vec<InferenceRow>,
    pub utility: Vec<UtilityRow>,
    /// One row per finite budget and defended attribute.
    pub privacy_audit: Vec<AuditRow>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).unwrap_or_default();
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let rep: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::Report(e.to_string()))?;
        if rep.schema != REPORT_SCHEMA {
            return Err(HarnessError::Report(format!(
                "unsupported report schema {}",
                rep.schema
            )));
        }
        Ok(rep)
    }

    pub fn identification_at(&self, eps: f64, chunk_s: f64) -> Option<&IdentificationRow> {
        self.identification
            .iter()
            .find(|r| r.eps == eps && r.chunk_s == chunk_s)
    }

    pub fn inference_at(&self, eps: f64) -> Option<&InferenceRow> {
        self.inference.iter().find(|r| r.eps == eps)
    }

    /// Plain-text tables for terminals.
    pub fn summary(&self) -> String {
        use std::fmt::Write;
        let opt = |v: Option<f64>| v.unwrap_or(f64::NAN);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} users, chance {:.3}, seed {}\n",
            self.population, self.chance, self.config.seed
        );
        let _ = writeln!(s, "{:>6} {:>7} {:>9} {:>17}", "eps", "chunk_s", "accuracy", "95% CI");
        for r in &self.identification {
            let _ = writeln!(
                s,
                "{:>6} {:>7} {:>9.3}   [{:.3}, {:.3}]",
                format_eps(r.eps),
                r.chunk_s,
                r.accuracy,
                r.ci_lo,
                r.ci_hi
            );
        }
        let _ = writeln!(
            s,
            "\n{:>6} {:>8} {:>7} {:>8} {:>7} {:>6} {:>8} {:>9} {:>8}",
            "eps", "h_mae", "h_r", "w_mae", "w_r", "hand", "tempo", "fake_err", "disp_m"
        );
        for inf in &self.inference {
            let disp = self.utility.iter().find(|u| u.eps == inf.eps);
            let _ = writeln!(
                s,
                "{:>6} {:>8.4} {:>7.3} {:>8.4} {:>7.3} {:>6.2} {:>8.4} {:>9.2e} {:>8.4}",
                format_eps(inf.eps),
                opt(inf.height.mae),
                inf.height.pearson_r,
                opt(inf.wingspan.mae),
                inf.wingspan.pearson_r,
                opt(inf.handedness.accuracy),
                opt(inf.tempo.mae),
                inf.fake_height_max_err.max(inf.fake_wingspan_max_err),
                opt(disp.map(|u| u.mean_displacement_m)),
            );
        }
        if !self.privacy_audit.is_empty() {
            let _ = writeln!(
                s,
                "\n{:>6} {:>10} {:>8} {:>8} {:>6}",
                "eps", "attribute", "nominal", "audited", "pass"
            );
            for a in &self.privacy_audit {
                let _ = writeln!(
                    s,
                    "{:>6} {:>10} {:>8.3} {:>8.3} {:>6}",
                    format_eps(a.eps),
                    format!("{:?}", a.attribute).to_lowercase(),
                    a.nominal_eps,
                    a.audited_eps,
                    a.passes
                );
            }
        }
        s
    }

    /// Flat table, one row per (budget, chunk) pair. Budget-level columns
    /// repeat on each chunk row.
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| HarnessError::Report(e.to_string());
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for row in &self.identification {
            let inf = self.inference_at(row.eps);
            let util = self.utility.iter().find(|u| u.eps == row.eps);
            let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
            w.write_record([
                format_eps(row.eps),
                num(row.chunk_s),
                row.chunks.to_string(),
                row.correct.to_string(),
                num(row.accuracy),
                num(row.ci_lo),
                num(row.ci_hi),
                num(self.chance),
                self.population.to_string(),
                opt(inf.and_then(|i| i.height.mae)),
                opt(inf.map(|i| i.height.pearson_r)),
                opt(inf.and_then(|i| i.wingspan.mae)),
                opt(inf.map(|i| i.wingspan.pearson_r)),
                opt(inf.and_then(|i| i.handedness.accuracy)),
                opt(inf.and_then(|i| i.tempo.mae)),
                opt(util.map(|u| u.mean_displacement_m)),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| HarnessError::Report(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| HarnessError::Report(e.to_string()))
    }
}

pub const CSV_HEADER: [&str; 16] = [
    "eps",
    "chunk_s",
    "chunks",
    "correct",
    "accuracy",
    "ci_lo",
    "ci_hi",
    "chance",
    "population",
    "height_mae",
    "height_r",
    "wingspan_mae",
    "wingspan_r",
    "handedness_accuracy",
    "tempo_mae",
    "displacement_m",
];

fn num(v: f64) -> String {
    if v.is_infinite() {
        format_eps(v)
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Json => "report.json",
            ReportFormat::Csv => "report.csv",
        }
    }
}

/// Write the report into `dir` in the requested format; returns the path.
pub fn write_report(
    rep: &ExperimentReport,
    format: ReportFormat,
    dir: &Path,
) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format.file_name());
    let body = match format {
        ReportFormat::Json => rep.to_json(),
        ReportFormat::Csv => rep.to_csv()?,
    };
    fs::write(&path, body)?;
    Ok(path)
}
