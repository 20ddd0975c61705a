use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::AttackError;
use crate::features::{FeatureConfig, FeatureVector, FEATURE_DIM};

pub const STD_FLOOR: f64 = 1e-6;
pub const VARIANCE_FLOOR: f64 = 1e-6;
pub const MIN_WINDOWS_PER_LABEL: usize = 5;
pub const MODEL_SCHEMA: &str = "motion-privacy/id-model/v1";

/// Per-feature z-scoring fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[&FeatureVector]) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; FEATURE_DIM];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row.values()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; FEATURE_DIM];
        for row in rows {
            for ((acc, v), m) in var.iter_mut().zip(row.values()).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        let std = var.iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
        Self { mean, std }
    }

    pub fn transform(&self, f: &FeatureVector) -> Vec<f64> {
        f.values()
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    NearestCentroid,
    GaussianNaiveBayes,
}

impl std::str::FromStr for ModelKind {
    type Err = AttackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nearest-centroid" | "centroid" | "nc" => Ok(Self::NearestCentroid),
            "gaussian-naive-bayes" | "gnb" => Ok(Self::GaussianNaiveBayes),
            other => Err(AttackError::ModelFormat(format!(
                "unknown model kind {other}"
            ))),
        }
    }
}

/// One parameter block per label, in label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelParams {
    NearestCentroid {
        centroids: Vec<Vec<f64>>,
    },
    GaussianNaiveBayes {
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    },
}

/// Trained gallery model. Labels are sorted, which also fixes tie-breaking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdModel {
    pub schema: String,
    pub labels: Vec<String>,
    pub standardizer: Standardizer,
    pub features: FeatureConfig,
    pub params: ModelParams,
}

impl IdModel {
    pub fn kind(&self) -> ModelKind {
        match self.params {
            ModelParams::NearestCentroid { .. } => ModelKind::NearestCentroid,
            ModelParams::GaussianNaiveBayes { .. } => ModelKind::GaussianNaiveBayes,
        }
    }

    pub fn to_json(&self) -> String {
        // the model holds only strings and finite floats
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    pub fn from_json(text: &str) -> Result<Self, AttackError> {
        let model: IdModel =
            serde_json::from_str(text).map_err(|e| AttackError::ModelFormat(e.to_string()))?;
        if model.schema != MODEL_SCHEMA {
            return Err(AttackError::ModelFormat(format!(
                "unsupported schema {}",
                model.schema
            )));
        }
        let blocks = match &model.params {
            ModelParams::NearestCentroid { centroids } => centroids.len(),
            ModelParams::GaussianNaiveBayes { means, variances } => {
                if means.len() != variances.len() {
                    return Err(AttackError::ModelFormat("means/variances mismatch".into()));
                }
                means.len()
            }
        };
        if blocks != model.labels.len() {
            return Err(AttackError::ModelFormat(format!(
                "{blocks} parameter blocks for {} labels",
                model.labels.len()
            )));
        }
        Ok(model)
    }
}

/// Fit a model on windows of `features` labelled by `labels`.
pub fn train_model(
    features: &[FeatureVector],
    labels: &[String],
    kind: ModelKind,
    feature_config: FeatureConfig,
) -> Result<IdModel, AttackError> {
    if features.len() != labels.len() {
        return Err(AttackError::LengthMismatch {
            rows: features.len(),
            labels: labels.len(),
        });
    }
    let mut groups: BTreeMap<&str, Vec<&FeatureVector>> = BTreeMap::new();
    for (f, l) in features.iter().zip(labels) {
        groups.entry(l.as_str()).or_default().push(f);
    }
    if groups.len() < 2 {
        return Err(AttackError::TooFewLabels(groups.len()));
    }
    if let Some((label, rows)) = groups.iter().find(|(_, r)| r.len() < MIN_WINDOWS_PER_LABEL) {
        return Err(AttackError::TooFewWindows {
            label: (*label).to_owned(),
            count: rows.len(),
        });
    }

    let all: Vec<&FeatureVector> = features.iter().collect();
    let standardizer = Standardizer::fit(&all);
    let mut means = Vec::with_capacity(groups.len());
    let mut variances = Vec::with_capacity(groups.len());
    for rows in groups.values() {
        let z: Vec<Vec<f64>> = rows.iter().map(|f| standardizer.transform(f)).collect();
        let n = z.len() as f64;
        let mut mean = vec![0.0; FEATURE_DIM];
        for row in &z {
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        if kind == ModelKind::GaussianNaiveBayes {
            let mut var = vec![0.0; FEATURE_DIM];
            for row in &z {
                for ((acc, v), m) in var.iter_mut().zip(row).zip(&mean) {
                    *acc += (v - m) * (v - m);
                }
            }
            variances.push(var.iter().map(|v| (v / n).max(VARIANCE_FLOOR)).collect());
        }
        means.push(mean);
    }
    let params = match kind {
        ModelKind::NearestCentroid => ModelParams::NearestCentroid { centroids: means },
        ModelKind::GaussianNaiveBayes => ModelParams::GaussianNaiveBayes { means, variances },
    };
    Ok(IdModel {
        schema: MODEL_SCHEMA.to_owned(),
        labels: groups.keys().map(|l| (*l).to_owned()).collect(),
        standardizer,
        features: feature_config,
        params,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: String,
    /// Score per model label, aligned with [`IdModel::labels`].
    pub scores: Vec<f64>,
}

/// Index of the highest score; the first (lexicographically smallest label)
/// wins ties.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn predict_window(m: &IdModel, f: &FeatureVector) -> Result<Prediction, AttackError> {
    let expected = m.standardizer.mean.len();
    if f.values().len() != expected || m.standardizer.std.len() != expected {
        return Err(AttackError::DimensionMismatch {
            expected,
            got: f.values().len(),
        });
    }
    let z = m.standardizer.transform(f);
    let scores: Vec<f64> = match &m.params {
        ModelParams::NearestCentroid { centroids } => centroids
            .iter()
            .map(|c| {
                -c.iter()
                    .zip(&z)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect(),
        ModelParams::GaussianNaiveBayes { means, variances } => means
            .iter()
            .zip(variances)
            .map(|(mu, var)| {
                mu.iter()
                    .zip(var)
                    .zip(&z)
                    .map(|((m, v), x)| -0.5 * (2.0 * PI * v).ln() - (x - m) * (x - m) / (2.0 * v))
                    .sum()
            })
            .collect(),
    };
    let best = argmax(&scores);
    Ok(Prediction {
        label: m.labels[best].clone(),
        scores,
    })
}
