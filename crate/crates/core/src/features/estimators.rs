//! Direct estimators for the anthropometric and behavioral attributes an
//! observer can read off a stream.
//!
//! Height and wingspan use an upper percentile rather than the maximum so a
//! handful of tracking glitches cannot move them. Both are positively
//! homogeneous: scaling the measured quantity by `g > 0` scales the estimate
//! by exactly `g`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{check_uniform_rate, FeatureError};
use crate::telemetry::{self, Recording};

/// Head tracker height as a fraction of standing height (eye level).
pub const HEAD_TO_HEIGHT: f64 = 0.93;
/// Upper percentile used for height and wingspan.
pub const PERCENTILE: f64 = 0.975;
pub const MIN_ESTIMATE_SECONDS: f64 = 2.0;
pub const MIN_TEMPO_SECONDS: f64 = 4.0;
pub const TEMPO_BAND_HZ: (f64, f64) = (0.5, 5.0);
/// Spectrum oversampling factor for the tempo peak search.
pub const TEMPO_ZERO_PAD: usize = 8;

/// Percentile with linear interpolation on rank `q * (n - 1)`.
///
/// Panics if `values` is empty.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

fn require_duration(r: &Recording, needed: f64) -> Result<(), FeatureError> {
    let got = r.duration();
    if got + 1e-9 < needed || r.frames.len() < 2 {
        return Err(FeatureError::TooShort { needed, got });
    }
    Ok(())
}

pub fn estimate_height(r: &Recording) -> Result<f64, FeatureError> {
    require_duration(r, MIN_ESTIMATE_SECONDS)?;
    let ys: Vec<f64> = r.frames.iter().map(|f| f.head.position[1]).collect();
    Ok(percentile(&ys, PERCENTILE) / HEAD_TO_HEIGHT)
}

pub fn estimate_wingspan(r: &Recording) -> Result<f64, FeatureError> {
    require_duration(r, MIN_ESTIMATE_SECONDS)?;
    let spans: Vec<f64> = r
        .frames
        .iter()
        .map(|f| telemetry::distance(&f.left.position, &f.right.position))
        .collect();
    Ok(percentile(&spans, PERCENTILE))
}

fn hand_speeds(r: &Recording, right: bool) -> Vec<f64> {
    r.frames
        .windows(2)
        .map(|w| {
            let (a, b) = if right {
                (&w[0].right.position, &w[1].right.position)
            } else {
                (&w[0].left.position, &w[1].left.position)
            };
            telemetry::distance(a, b) * r.rate
        })
        .collect()
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandednessEstimate {
    /// Share of hand-speed variance on the right hand; above 0.5 means
    /// right-dominant.
    pub score: f64,
    /// Both hands were motionless; `score` is pinned to 0.5.
    pub degenerate: bool,
}

impl HandednessEstimate {
    pub fn right_dominant(&self) -> bool {
        self.score > 0.5
    }
}

pub fn estimate_handedness(r: &Recording) -> Result<HandednessEstimate, FeatureError> {
    require_duration(r, MIN_ESTIMATE_SECONDS)?;
    check_uniform_rate(&r.frames, r.rate)?;
    let left = variance(&hand_speeds(r, false));
    let right = variance(&hand_speeds(r, true));
    let total = left + right;
    if !(total > 0.0) {
        return Ok(HandednessEstimate {
            score: 0.5,
            degenerate: true,
        });
    }
    Ok(HandednessEstimate {
        score: right / total,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempoEstimate {
    pub hz: f64,
    /// Frequency spacing of the spectrum, `rate / N`.
    pub resolution_hz: f64,
    /// No movement in band; `hz` is the lower band edge.
    pub degenerate: bool,
}

/// Dominant movement frequency of the dominant hand's speed, searched over
/// [`TEMPO_BAND_HZ`].
pub fn estimate_tempo(r: &Recording) -> Result<TempoEstimate, FeatureError> {
    require_duration(r, MIN_TEMPO_SECONDS)?;
    check_uniform_rate(&r.frames, r.rate)?;
    let hand = estimate_handedness(r)?;
    let mut speed = hand_speeds(r, hand.score >= 0.5);
    let n = speed.len();
    let mean = speed.iter().sum::<f64>() / n as f64;
    speed.iter_mut().for_each(|s| *s -= mean);

    let resolution = r.rate / n as f64;
    // zero-padded grid: a tone between two bins loses up to a third of its
    // magnitude on the plain grid, enough for a harmonic to outrank it
    let step = resolution / TEMPO_ZERO_PAD as f64;
    let (lo, hi) = TEMPO_BAND_HZ;
    let k_lo = (lo / step).ceil().max(1.0) as usize;
    let k_hi = ((hi / step).floor() as usize).min(n * TEMPO_ZERO_PAD / 2);

    let mut best = (TEMPO_BAND_HZ.0, 0.0);
    for k in k_lo..=k_hi {
        let omega = 2.0 * PI * k as f64 / (n * TEMPO_ZERO_PAD) as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (i, s) in speed.iter().enumerate() {
            let (sin, cos) = (omega * i as f64).sin_cos();
            re += s * cos;
            im -= s * sin;
        }
        let mag = re.hypot(im);
        if mag > best.1 {
            best = (k as f64 * step, mag);
        }
    }
    let scale = speed.iter().map(|s| s.abs()).sum::<f64>();
    let degenerate = !(best.1 > 1e-9 * scale.max(f64::MIN_POSITIVE)) || scale == 0.0;
    Ok(TempoEstimate {
        hz: if degenerate { lo } else { best.0 },
        resolution_hz: resolution,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeEstimates {
    pub height_m: f64,
    pub wingspan_m: f64,
    pub handedness_score: f64,
    pub tempo_hz: f64,
}

pub fn estimate_attributes(r: &Recording) -> Result<AttributeEstimates, FeatureError> {
    Ok(AttributeEstimates {
        height_m: estimate_height(r)?,
        wingspan_m: estimate_wingspan(r)?,
        handedness_score: estimate_handedness(r)?.score,
        tempo_hz: estimate_tempo(r)?.hz,
    })
}
