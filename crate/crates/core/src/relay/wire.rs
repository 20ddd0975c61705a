//! Wire protocol: newline-delimited JSON, one message per line.
//!
//! ```text
//! {"kind":"hello","user":"u001","session":"s01","rate":30,"declared_height":1.75,"declared_wingspan":1.8}
//! {"t":0,"head":{"p":[..],"q":[..]},"left":{..},"right":{..}}
//! {"kind":"bye","frames":300}
//! ```
//!
//! Frame messages are bare recording frame lines. Control messages carry a
//! `kind` key, which a frame line never contains.

use serde::Deserialize;

use super::WireError;
use crate::telemetry::write_json_string;
use crate::telemetry::{
    format_number, frame_from_line, write_frame_line, Frame, MAX_RATE, MIN_RATE,
};

/// Session opener. Declared attributes may be omitted only when the relay
/// runs in calibrate mode.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hello {
    pub user: String,
    pub session: String,
    pub rate: f64,
    #[serde(default)]
    pub declared_height: Option<f64>,
    #[serde(default)]
    pub declared_wingspan: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WireMessage {
    Hello(Hello),
    Frame(Frame),
    Bye { frames: u64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ByeBody {
    frames: u64,
}

pub(crate) fn write_hello(h: &Hello, out: &mut String) {
    out.push_str("{\"kind\":\"hello\",\"user\":");
    write_json_string(&h.user, out);
    out.push_str(",\"session\":");
    write_json_string(&h.session, out);
    out.push_str(",\"rate\":");
    format_number(h.rate, out);
    if let Some(v) = h.declared_height {
        out.push_str(",\"declared_height\":");
        format_number(v, out);
    }
    if let Some(v) = h.declared_wingspan {
        out.push_str(",\"declared_wingspan\":");
        format_number(v, out);
    }
    out.push('}');
}

pub(crate) fn write_bye(frames: u64, out: &mut String) {
    out.push_str("{\"kind\":\"bye\",\"frames\":");
    out.push_str(&frames.to_string());
    out.push('}');
}

/// Append the message as one LF-terminated line.
pub fn encode_message_into(m: &WireMessage, out: &mut String) {
    match m {
        WireMessage::Hello(h) => write_hello(h, out),
        WireMessage::Frame(f) => write_frame_line(f, out),
        WireMessage::Bye { frames } => write_bye(*frames, out),
    }
    out.push('\n');
}

pub fn encode_message(m: &WireMessage) -> Vec<u8> {
    let mut s = String::with_capacity(320);
    encode_message_into(m, &mut s);
    s.into_bytes()
}

fn check_hello(h: &Hello) -> Result<(), WireError> {
    if h.user.is_empty() || h.session.is_empty() {
        return Err(WireError::Malformed("empty user or session id".into()));
    }
    if !(MIN_RATE..=MAX_RATE).contains(&h.rate) {
        return Err(WireError::Malformed(format!(
            "rate {} outside [1, 1000]",
            h.rate
        )));
    }
    for v in [h.declared_height, h.declared_wingspan]
        .into_iter()
        .flatten()
    {
        if !(v.is_finite() && v > 0.0) {
            return Err(WireError::Malformed(format!(
                "declared attribute {v} not positive"
            )));
        }
    }
    Ok(())
}

fn decode_control(line: &str) -> Result<WireMessage, WireError> {
    let mut value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| WireError::Malformed(e.to_string()))?;
    let kind = value
        .as_object_mut()
        .and_then(|o| o.remove("kind"))
        .ok_or_else(|| WireError::Malformed("missing kind".into()))?;
    let kind = kind
        .as_str()
        .ok_or_else(|| WireError::Malformed("kind is not a string".into()))?;
    match kind {
        "hello" => {
            let h: Hello =
                serde_json::from_value(value).map_err(|e| WireError::Malformed(e.to_string()))?;
            check_hello(&h)?;
            Ok(WireMessage::Hello(h))
        }
        "bye" => {
            let b: ByeBody =
                serde_json::from_value(value).map_err(|e| WireError::Malformed(e.to_string()))?;
            Ok(WireMessage::Bye { frames: b.frames })
        }
        "frame" => Err(WireError::Malformed(
            "frames are sent as bare frame lines".into(),
        )),
        other => Err(WireError::UnknownKind(other.to_owned())),
    }
}

/// Decode one line. A trailing LF (and CR) is tolerated.
pub fn decode_message(line: &[u8]) -> Result<WireMessage, WireError> {
    let line = std::str::from_utf8(line).map_err(|_| WireError::Malformed("not UTF-8".into()))?;
    let line = line.trim_end_matches(['\n', '\r']);
    if line.contains("\"kind\"") {
        decode_control(line)
    } else {
        frame_from_line(line)
            .map(WireMessage::Frame)
            .map_err(WireError::Malformed)
    }
}
