//! Anonymizing relay.
//!
//! Accepts telemetry sessions over TCP, rewrites every frame with the
//! session's defense parameters and forwards the result to a downstream
//! TCP endpoint or to files. One session per connection; each connection
//! runs on its own thread and frames are processed strictly in order.
//!
//! Declared attributes in `hello` seed the defense. In calibrate mode the
//! relay instead buffers the first 2 s of frames and estimates them.

mod bench;
mod server;
mod session;
mod wire;

pub use bench::{bench_relay, BenchConfig};
pub use server::{Relay, RelayHandle, RelayOptions, Sink};
pub use session::{Downstream, Session, Step};
pub use wire::{decode_message, encode_message, encode_message_into, Hello, WireMessage};

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::privacy::PrivacyError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WireError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unknown message kind {0:?}")]
    UnknownKind(String),
}

#[derive(Debug, Error)]
pub enum RelayError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error("sink unavailable: {0}")]
    SinkUnavailable(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Aggregate relay counters. Latencies are per-frame processing times from
/// the moment a line is read until it has been written and flushed
/// downstream, in microseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayStats {
    pub frames_relayed: u64,
    pub sessions: u64,
    pub rejected_messages: u64,
    pub elapsed_s: f64,
    pub frames_per_sec: f64,
    pub latency_p50_us: f64,
    pub latency_p99_us: f64,
    pub latency_max_us: f64,
}

/// Nearest-rank quantile of an ascending slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Mutex-guarded accumulator shared by connection threads. Each connection
/// merges its own counters once, when it ends.
#[derive(Debug, Default)]
pub(crate) struct StatsAccumulator {
    pub(crate) frames: u64,
    pub(crate) sessions: u64,
    pub(crate) rejected: u64,
    pub(crate) first: Option<Instant>,
    pub(crate) last: Option<Instant>,
    pub(crate) latencies_us: Vec<f64>,
}

impl StatsAccumulator {
    pub(crate) fn merge(&mut self, other: StatsAccumulator) {
        self.frames += other.frames;
        self.sessions += other.sessions;
        self.rejected += other.rejected;
        self.first = match (self.first, other.first) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.last = self.last.max(other.last);
        self.latencies_us.extend(other.latencies_us);
    }

    pub(crate) fn finish(mut self, elapsed_s: f64) -> RelayStats {
        self.latencies_us.sort_by(f64::total_cmp);
        let l = &self.latencies_us;
        // rate over the span in which frames were actually flowing
        let span = match (self.first, self.last) {
            (Some(a), Some(b)) if b > a => (b - a).as_secs_f64(),
            _ => elapsed_s,
        };
        RelayStats {
            frames_relayed: self.frames,
            sessions: self.sessions,
            rejected_messages: self.rejected,
            elapsed_s,
            frames_per_sec: if span > 0.0 {
                self.frames as f64 / span
            } else {
                0.0
            },
            latency_p50_us: quantile(l, 0.50),
            latency_p99_us: quantile(l, 0.99),
            latency_max_us: l.last().copied().unwrap_or(0.0),
        }
    }
}
