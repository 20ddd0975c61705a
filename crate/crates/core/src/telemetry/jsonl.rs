//! JSONL recording format.
//!
//! ```text
//! {"meta":{"user":"<id>","session":"<id>","rate":<Hz>}}
//! {"t":<sec>,"head":{"p":[x,y,z],"q":[w,x,y,z]},"left":{...},"right":{...}}
//! ```
//!
//! The frame line grammar doubles as the relay wire format. Numbers are
//! written with 9 significant digits, so output is canonical: a value written
//! once is read back and re-written byte-identically.

use std::fmt::Write as _;

use serde::Deserialize;

use super::{Frame, Pose, Quat, Recording, TelemetryError};

/// Quaternions further than this from unit norm are renormalized on ingest.
const RENORMALIZE_ABOVE: f64 = 1e-8;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaLine {
    meta: MetaBody,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaBody {
    user: String,
    session: String,
    rate: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameLine {
    t: f64,
    head: PoseLine,
    left: PoseLine,
    right: PoseLine,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseLine {
    p: [f64; 3],
    q: [f64; 4],
}

impl PoseLine {
    fn into_pose(self) -> Result<Pose, String> {
        let q = Quat::from_array(self.q);
        let norm = q.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(format!("degenerate quaternion {:?}", self.q));
        }
        let orientation = if (norm - 1.0).abs() > RENORMALIZE_ABOVE {
            q.scale(1.0 / norm)
        } else {
            q
        };
        Ok(Pose::new(self.p, orientation))
    }
}

/// Round to 9 significant digits.
pub fn round_sig9(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v + 0.0;
    }
    // a `{:e}` rendering always parses back
    format!("{v:.8e}").parse::<f64>().unwrap_or(v) + 0.0
}

/// Append `v` rounded to 9 significant digits in plain decimal notation.
pub fn format_number(v: f64, out: &mut String) {
    let r = round_sig9(v);
    let _ = write!(out, "{r}");
}

fn write_vec(values: &[f64], out: &mut String) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        format_number(*v, out);
    }
    out.push(']');
}

fn write_pose(name: &str, pose: &Pose, out: &mut String) {
    out.push('"');
    out.push_str(name);
    out.push_str("\":{\"p\":");
    write_vec(&pose.position, out);
    out.push_str(",\"q\":");
    write_vec(&pose.orientation.to_array(), out);
    out.push('}');
}

pub(crate) fn write_json_string(s: &str, out: &mut String) {
    // serializing a &str cannot fail
    out.push_str(&serde_json::to_string(s).unwrap_or_default());
}

/// Append the meta line (without trailing newline).
pub fn write_meta_line(user: &str, session: &str, rate: f64, out: &mut String) {
    out.push_str("{\"meta\":{\"user\":");
    write_json_string(user, out);
    out.push_str(",\"session\":");
    write_json_string(session, out);
    out.push_str(",\"rate\":");
    format_number(rate, out);
    out.push_str("}}");
}

/// Append one frame line (without trailing newline).
pub fn write_frame_line(frame: &Frame, out: &mut String) {
    out.push_str("{\"t\":");
    format_number(frame.t, out);
    out.push(',');
    write_pose("head", &frame.head, out);
    out.push(',');
    write_pose("left", &frame.left, out);
    out.push(',');
    write_pose("right", &frame.right, out);
    out.push('}');
}

/// Parse a single frame line. Errors carry only the reason; callers attach
/// the line location.
pub fn frame_from_line(line: &str) -> Result<Frame, String> {
    let raw: FrameLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
    Ok(Frame {
        t: raw.t,
        head: raw.head.into_pose()?,
        left: raw.left.into_pose()?,
        right: raw.right.into_pose()?,
    })
}

pub fn parse_recording(text: &str) -> Result<Recording, TelemetryError> {
    let mut lines = text.split('\n').enumerate();
    let meta = match lines.next() {
        Some((_, first)) if !first.trim().is_empty() => first,
        _ => return Err(TelemetryError::MissingMeta),
    };
    let meta: MetaLine = match serde_json::from_str(meta) {
        Ok(m) => m,
        Err(e) => {
            if frame_from_line(meta).is_ok() {
                return Err(TelemetryError::MissingMeta);
            }
            return Err(TelemetryError::MalformedLine {
                line: 1,
                reason: e.to_string(),
            });
        }
    };

    let mut frames: Vec<Frame> = Vec::new();
    let mut trailing_blank = false;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            trailing_blank = true;
            continue;
        }
        if trailing_blank {
            return Err(TelemetryError::MalformedLine {
                line: line_no - 1,
                reason: "blank line inside document".into(),
            });
        }
        let frame = frame_from_line(line).map_err(|reason| TelemetryError::MalformedLine {
            line: line_no,
            reason,
        })?;
        if let Some(prev) = frames.last() {
            if !(frame.t > prev.t) {
                return Err(TelemetryError::NonMonotonicTimestamp(frames.len()));
            }
        }
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(TelemetryError::NoFrames);
    }
    Ok(Recording {
        user_id: meta.meta.user,
        session_id: meta.meta.session,
        rate: meta.meta.rate,
        frames,
    })
}

/// Serialize to the JSONL format; every line, including the last, ends in LF.
pub fn serialize_recording(r: &Recording) -> String {
    let mut out = String::with_capacity(64 + r.frames.len() * 360);
    write_meta_line(&r.user_id, &r.session_id, r.rate, &mut out);
    out.push('\n');
    for frame in &r.frames {
        write_frame_line(frame, &mut out);
        out.push('\n');
    }
    out
}
