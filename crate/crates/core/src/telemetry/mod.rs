//! Data model for XR motion streams.
//!
//! A [`Recording`] is an ordered sequence of [`Frame`]s, each holding three
//! 6-DoF poses: head, left hand and right hand. Coordinates are right-handed,
//! y-up, in meters, with the floor at `y = 0`. Orientations are unit
//! quaternions stored as `(w, x, y, z)`.

mod jsonl;
mod quat;
mod resample;
mod validate;

pub(crate) use jsonl::write_json_string;
pub use jsonl::{
    format_number, frame_from_line, parse_recording, round_sig9, serialize_recording,
    write_frame_line, write_meta_line,
};
pub use quat::{euler_from_quat, quat_from_euler, Euler, Quat};
pub use resample::resample;
pub use validate::{validate_recording, ValidationReport, Violation};

use thiserror::Error;

/// Position vector in meters.
pub type Vec3 = [f64; 3];

/// Positions with any component at or beyond this magnitude are rejected.
pub const POSITION_LIMIT: f64 = 100.0;
/// Admissible nominal sampling rates, Hz.
pub const MIN_RATE: f64 = 1.0;
pub const MAX_RATE: f64 = 1000.0;
/// Quaternion norm tolerance for a valid pose.
pub const QUAT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TelemetryError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("first line is not a meta line")]
    MissingMeta,
    #[error("recording has no frames")]
    NoFrames,
    #[error("timestamp of frame {0} does not strictly increase")]
    NonMonotonicTimestamp(usize),
    #[error("recording too short: {frames} frame(s)")]
    TooShort { frames: usize },
    #[error("rate {0} Hz outside [1, 1000]")]
    InvalidRate(f64),
    #[error("quaternion norm {0} is not unit")]
    NotUnit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Quat,
}

impl Pose {
    pub const fn new(position: Vec3, orientation: Quat) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn at(position: Vec3) -> Self {
        Self::new(position, Quat::IDENTITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub head: Pose,
    pub left: Pose,
    pub right: Pose,
}

impl Frame {
    pub fn poses(&self) -> [&Pose; 3] {
        [&self.head, &self.left, &self.right]
    }
}

/// An ordered frame sequence tagged with its user, session and nominal rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub user_id: String,
    pub session_id: String,
    pub rate: f64,
    pub frames: Vec<Frame>,
}

impl Recording {
    pub fn new(
        user_id: impl Into<String>,
        session_id: impl Into<String>,
        rate: f64,
        frames: Vec<Frame>,
    ) -> Self {
        Self {
            user_id: user_id.into(),
            session_id: session_id.into(),
            rate,
            frames,
        }
    }

    /// Time covered by the frames, counting the last sample period.
    pub fn duration(&self) -> f64 {
        match (self.frames.first(), self.frames.last()) {
            (Some(first), Some(last)) => last.t - first.t + 1.0 / self.rate,
            _ => 0.0,
        }
    }

    /// A copy holding only `frames`, keeping user, session and rate.
    pub fn with_frames(&self, frames: Vec<Frame>) -> Self {
        Self {
            user_id: self.user_id.clone(),
            session_id: self.session_id.clone(),
            rate: self.rate,
            frames,
        }
    }
}

/// Euclidean distance between two positions.
pub fn distance(a: &Vec3, b: &Vec3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}
