use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::model::{predict_window, IdModel, ModelKind, Prediction};
use super::AttackError;
use crate::features::{window_features, windows_in};
use crate::telemetry::{Frame, Recording};

/// Majority label over window predictions. Vote ties go to the larger summed
/// score, then to the lexicographically smaller label.
pub fn aggregate_votes(labels: &[String], predictions: &[Prediction]) -> Option<String> {
    if predictions.is_empty() {
        return None;
    }
    let mut votes = vec![0usize; labels.len()];
    let mut sums = vec![0.0f64; labels.len()];
    for p in predictions {
        if let Some(i) = labels.iter().position(|l| *l == p.label) {
            votes[i] += 1;
        }
        sums.iter_mut().zip(&p.scores).for_each(|(s, v)| *s += v);
    }
    let mut best = 0;
    for i in 1..labels.len() {
        let better = votes[i] > votes[best]
            || (votes[i] == votes[best] && sums[i] > sums[best])
            || (votes[i] == votes[best] && sums[i] == sums[best] && labels[i] < labels[best]);
        if better {
            best = i;
        }
    }
    Some(labels[best].clone())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkVerdict {
    pub label: String,
    pub windows: usize,
    pub votes: usize,
}

fn identify_frames(
    m: &IdModel,
    frames: &[Frame],
    rate: f64,
) -> Result<Option<ChunkVerdict>, AttackError> {
    let cfg = m.features;
    let windows = windows_in(frames, rate, cfg.window_s, cfg.hop_s)?;
    let predictions = windows
        .iter()
        .map(|w| predict_window(m, &window_features(w)?))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate_votes(&m.labels, &predictions).map(|label| {
        let votes = predictions.iter().filter(|p| p.label == label).count();
        ChunkVerdict {
            label,
            windows: predictions.len(),
            votes,
        }
    }))
}

fn chunk_frames(m: &IdModel, chunk_s: f64) -> Result<usize, AttackError> {
    if chunk_s + 1e-9 < m.features.window_s {
        return Err(AttackError::ChunkShorterThanWindow {
            chunk_s,
            window_s: m.features.window_s,
        });
    }
    Ok((chunk_s * m.features.rate_hz).round() as usize)
}

/// Label `r` from the windows inside its first `chunk_s` seconds.
pub fn identify_chunk(
    m: &IdModel,
    r: &Recording,
    chunk_s: f64,
) -> Result<ChunkVerdict, AttackError> {
    let per_chunk = chunk_frames(m, chunk_s)?;
    let r = m.features.prepare(r)?;
    let end = per_chunk.min(r.frames.len());
    identify_frames(m, &r.frames[..end], r.rate)?
        .ok_or_else(|| AttackError::TooShort(r.user_id.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub train_sessions: Vec<String>,
    pub test_sessions: Vec<String>,
    pub chunk_s: f64,
    pub model_kind: ModelKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UserTally {
    pub correct: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusedPair {
    pub truth: String,
    pub predicted: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub chunks: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// `1 / |labels|`.
    pub chance: f64,
    pub per_user: BTreeMap<String, UserTally>,
    /// Most frequent (truth, predicted) errors, at most five.
    pub confused_pairs: Vec<ConfusedPair>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

const TOP_CONFUSED: usize = 5;

/// Cross-session identification accuracy, taking each recording's user id
/// as its true label.
pub fn evaluate_identification(
    m: &IdModel,
    test: &[Recording],
    chunk_s: f64,
) -> Result<EvalReport, AttackError> {
    let truth: Vec<&str> = test.iter().map(|r| r.user_id.as_str()).collect();
    evaluate_identification_with_truth(m, test, &truth, chunk_s)
}

/// Carve every test recording into back-to-back chunks of `chunk_s` seconds
/// and identify each one against `truth`.
pub fn evaluate_identification_with_truth(
    m: &IdModel,
    test: &[Recording],
    truth: &[&str],
    chunk_s: f64,
) -> Result<EvalReport, AttackError> {
    if test.is_empty() {
        return Err(AttackError::EmptyTestSet);
    }
    if truth.len() != test.len() {
        return Err(AttackError::LengthMismatch {
            rows: test.len(),
            labels: truth.len(),
        });
    }
    let per_chunk = chunk_frames(m, chunk_s)?.max(1);
    let mut per_user: BTreeMap<String, UserTally> = BTreeMap::new();
    let mut confusion: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut test_sessions: Vec<String> = Vec::new();
    let (mut chunks, mut correct) = (0, 0);

    for (r, truth) in test.iter().zip(truth) {
        if !test_sessions.contains(&r.session_id) {
            test_sessions.push(r.session_id.clone());
        }
        let prepared = m.features.prepare(r)?;
        let mut any = false;
        for frames in prepared.frames.chunks_exact(per_chunk) {
            let Some(verdict) = identify_frames(m, frames, prepared.rate)? else {
                continue;
            };
            any = true;
            chunks += 1;
            let tally = per_user.entry((*truth).to_owned()).or_default();
            tally.total += 1;
            if verdict.label == *truth {
                correct += 1;
                tally.correct += 1;
            } else {
                *confusion
                    .entry(((*truth).to_owned(), verdict.label))
                    .or_default() += 1;
            }
        }
        if !any {
            return Err(AttackError::TooShort(r.user_id.clone()));
        }
    }
    test_sessions.sort();

    let mut confused_pairs: Vec<ConfusedPair> = confusion
        .into_iter()
        .map(|((truth, predicted), count)| ConfusedPair {
            truth,
            predicted,
            count,
        })
        .collect();
    // stable sort keeps (truth, predicted) order among equal counts
    confused_pairs.sort_by(|a, b| b.count.cmp(&a.count));
    confused_pairs.truncate(TOP_CONFUSED);

    Ok(EvalReport {
        protocol: Protocol {
            train_sessions: Vec::new(),
            test_sessions,
            chunk_s,
            model_kind: m.kind(),
        },
        chunks,
        correct,
        accuracy: correct as f64 / chunks as f64,
        chance: 1.0 / m.labels.len() as f64,
        per_user,
        confused_pairs,
    })
}
