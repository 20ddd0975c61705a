//! Windowed summary features and direct attribute estimators.
//!
//! A uniform-rate recording is cut into overlapping windows. Each window
//! yields 21 channels (position and Euler angles for the three trackers plus
//! three inter-tracker distances), and each channel is reduced to five
//! statistics, giving a fixed 105-value [`FeatureVector`].

mod csv_io;
mod estimators;
mod windows;

pub use csv_io::{read_feature_csv, write_feature_csv, FeatureRow};
pub use estimators::{
    estimate_attributes, estimate_handedness, estimate_height, estimate_tempo, estimate_wingspan,
    percentile, AttributeEstimates, HandednessEstimate, TempoEstimate, HEAD_TO_HEIGHT,
    MIN_ESTIMATE_SECONDS, MIN_TEMPO_SECONDS, PERCENTILE, TEMPO_BAND_HZ,
};
pub use windows::{check_uniform_rate, make_windows, windows_in, Window};

use std::borrow::Cow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::telemetry::{self, euler_from_quat, Recording, TelemetryError};

pub const CHANNEL_COUNT: usize = 21;
pub const STAT_COUNT: usize = 5;
pub const FEATURE_DIM: usize = CHANNEL_COUNT * STAT_COUNT;

pub const CHANNELS: [&str; CHANNEL_COUNT] = [
    "head.px",
    "head.py",
    "head.pz",
    "head.yaw",
    "head.pitch",
    "head.roll",
    "left.px",
    "left.py",
    "left.pz",
    "left.yaw",
    "left.pitch",
    "left.roll",
    "right.px",
    "right.py",
    "right.pz",
    "right.yaw",
    "right.pitch",
    "right.roll",
    "dist.lr",
    "dist.hl",
    "dist.hr",
];

pub const STATS: [&str; STAT_COUNT] = ["min", "max", "mean", "median", "std"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("frames are not on a uniform {0} Hz grid")]
    NotUniformRate(f64),
    #[error("invalid window parameters: length {len}, hop {hop}")]
    InvalidWindow { len: f64, hop: f64 },
    #[error("empty channel")]
    EmptyChannel,
    #[error("need at least {needed} s of data, got {got:.3} s")]
    TooShort { needed: f64, got: f64 },
    #[error("feature vector has {0} values, expected {FEATURE_DIM}")]
    WrongDimension(usize),
    #[error("non-finite feature at index {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Telemetry(#[from] TelemetryError),
    #[error("csv: {0}")]
    Csv(String),
}

/// Feature names in schema order, `"<channel>.<stat>"`.
pub fn feature_names() -> Vec<String> {
    CHANNELS
        .iter()
        .flat_map(|c| STATS.iter().map(move |s| format!("{c}.{s}")))
        .collect()
}

/// Schema position of a `(channel, statistic)` pair.
pub fn feature_index(channel: &str, stat: &str) -> Option<usize> {
    let c = CHANNELS.iter().position(|&x| x == channel)?;
    let s = STATS.iter().position(|&x| x == stat)?;
    Some(c * STAT_COUNT + s)
}

/// Exactly [`FEATURE_DIM`] finite values in schema order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self, FeatureError> {
        if values.len() != FEATURE_DIM {
            return Err(FeatureError::WrongDimension(values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite(i));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, channel: &str, stat: &str) -> Option<f64> {
        feature_index(channel, stat).map(|i| self.0[i])
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = FeatureError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(v: FeatureVector) -> Self {
        v.0
    }
}

/// Five-number summary of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Summary {
    pub fn to_array(self) -> [f64; STAT_COUNT] {
        [self.min, self.max, self.mean, self.median, self.std]
    }
}

pub fn summarize_channel(values: &[f64]) -> Result<Summary, FeatureError> {
    if values.is_empty() {
        return Err(FeatureError::EmptyChannel);
    }
    let n = values.len() as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 0 {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    };
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    if min == max {
        return Ok(Summary {
            min,
            max,
            mean: min,
            median,
            std: 0.0,
        });
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(Summary {
        min,
        max,
        // rounding can push the mean a hair outside [min, max]
        mean: mean.clamp(min, max),
        median,
        std: var.sqrt(),
    })
}

/// The 21 channel series of a window, in [`CHANNELS`] order.
pub fn channel_series(w: &Window<'_>) -> Result<Vec<Vec<f64>>, FeatureError> {
    let n = w.frames.len();
    let mut channels = vec![Vec::with_capacity(n); CHANNEL_COUNT];
    for frame in w.frames {
        for (k, pose) in frame.poses().into_iter().enumerate() {
            let e = euler_from_quat(pose.orientation)?;
            let base = k * 6;
            channels[base].push(pose.position[0]);
            channels[base + 1].push(pose.position[1]);
            channels[base + 2].push(pose.position[2]);
            channels[base + 3].push(e.yaw);
            channels[base + 4].push(e.pitch);
            channels[base + 5].push(e.roll);
        }
        let (h, l, r) = (
            &frame.head.position,
            &frame.left.position,
            &frame.right.position,
        );
        channels[18].push(telemetry::distance(l, r));
        channels[19].push(telemetry::distance(h, l));
        channels[20].push(telemetry::distance(h, r));
    }
    Ok(channels)
}

pub fn window_features(w: &Window<'_>) -> Result<FeatureVector, FeatureError> {
    let mut values = Vec::with_capacity(FEATURE_DIM);
    for series in channel_series(w)? {
        values.extend(summarize_channel(&series)?.to_array());
    }
    FeatureVector::new(values)
}

/// Featurization settings shared by training and identification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub rate_hz: f64,
    pub window_s: f64,
    pub hop_s: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            rate_hz: 30.0,
            window_s: 1.0,
            hop_s: 0.5,
        }
    }
}

impl FeatureConfig {
    /// Bring `r` onto this config's uniform grid, borrowing when it already is.
    pub fn prepare<'a>(&self, r: &'a Recording) -> Result<Cow<'a, Recording>, FeatureError> {
        if r.rate == self.rate_hz && check_uniform_rate(&r.frames, r.rate).is_ok() {
            Ok(Cow::Borrowed(r))
        } else {
            Ok(Cow::Owned(telemetry::resample(r, self.rate_hz)?))
        }
    }

    /// Feature vectors of every window of `r`, with window start times.
    pub fn featurize(&self, r: &Recording) -> Result<Vec<(f64, FeatureVector)>, FeatureError> {
        let r = self.prepare(r)?;
        make_windows(&r, self.window_s, self.hop_s)?
            .iter()
            .map(|w| Ok((w.start_t, window_features(w)?)))
            .collect()
    }

    pub fn feature_rows(&self, r: &Recording) -> Result<Vec<FeatureRow>, FeatureError> {
        Ok(self
            .featurize(r)?
            .into_iter()
            .map(|(window_start, features)| FeatureRow {
                user_id: r.user_id.clone(),
                session_id: r.session_id.clone(),
                window_start,
                features,
            })
            .collect())
    }
}
