use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::AttackError;
use crate::features::{estimate_handedness, estimate_height, estimate_tempo, estimate_wingspan};
use crate::synth::GroundTruth;
use crate::telemetry::Recording;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Height,
    Wingspan,
    Handedness,
    Tempo,
}

impl Attribute {
    pub const ALL: [Attribute; 4] = [
        Attribute::Height,
        Attribute::Wingspan,
        Attribute::Handedness,
        Attribute::Tempo,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub attribute: Attribute,
    pub n: usize,
    /// Mean absolute error for continuous attributes.
    pub mae: Option<f64>,
    /// Classification accuracy for handedness.
    pub accuracy: Option<f64>,
    /// Pearson correlation between estimates and truth across recordings.
    pub pearson_r: f64,
    /// Correlation undefined (a constant series); `pearson_r` reported as 0.
    pub degenerate: bool,
}

/// Pearson correlation, or `None` when either series is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Score paired estimates against truth.
pub(crate) fn score_pairs(
    attribute: Attribute,
    estimates: &[f64],
    truth: &[f64],
) -> InferenceReport {
    let n = estimates.len();
    let r = pearson(estimates, truth);
    let (mae, accuracy) = if attribute == Attribute::Handedness {
        let hits = estimates
            .iter()
            .zip(truth)
            .filter(|(e, t)| (**e > 0.5) == (**t > 0.5))
            .count();
        (None, Some(hits as f64 / n.max(1) as f64))
    } else {
        let err = estimates
            .iter()
            .zip(truth)
            .map(|(e, t)| (e - t).abs())
            .sum::<f64>();
        (Some(err / n.max(1) as f64), None)
    };
    InferenceReport {
        attribute,
        n,
        mae,
        accuracy,
        pearson_r: r.unwrap_or(0.0),
        degenerate: r.is_none(),
    }
}

/// Estimate `which` on every recording and compare with its user's truth.
/// Handedness truth is coded 1 for right, 0 for left.
pub fn evaluate_inference(
    test: &[Recording],
    truth: &HashMap<String, GroundTruth>,
    which: Attribute,
) -> Result<InferenceReport, AttackError> {
    if test.is_empty() {
        return Err(AttackError::EmptyTestSet);
    }
    let mut est = Vec::with_capacity(test.len());
    let mut tru = Vec::with_capacity(test.len());
    for r in test {
        let gt = truth
            .get(&r.user_id)
            .ok_or_else(|| AttackError::MissingGroundTruth(r.user_id.clone()))?;
        let (e, t) = match which {
            Attribute::Height => (estimate_height(r)?, gt.height),
            Attribute::Wingspan => (estimate_wingspan(r)?, gt.wingspan),
            Attribute::Handedness => (
                estimate_handedness(r)?.score,
                if gt.handedness.is_right() { 1.0 } else { 0.0 },
            ),
            Attribute::Tempo => (estimate_tempo(r)?.hz, gt.tempo),
        };
        est.push(e);
        tru.push(t);
    }
    Ok(score_pairs(which, &est, &tru))
}
