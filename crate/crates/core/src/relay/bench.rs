//! Loopback benchmark: client -> relay -> drain, all over TCP.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;
use std::time::{Duration, Instant};

use super::server::{Relay, RelayOptions, Sink};
use super::wire::{encode_message_into, Hello, WireMessage};
use super::{RelayError, RelayStats};
use crate::features::{estimate_height, estimate_wingspan};
use crate::privacy::EpsilonConfig;
use crate::synth::{generate_population, generate_session, SessionSpec};
use crate::telemetry::round_sig9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub n_frames: u64,
    /// Offered load in frames per second; infinite sends as fast as the
    /// socket accepts.
    pub rate: f64,
    pub eps: EpsilonConfig,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(n_frames: u64, rate: f64) -> Self {
        Self {
            n_frames,
            rate,
            eps: EpsilonConfig::default(),
            seed: 7,
        }
    }
}

/// Stream `n_frames` frames of one synthetic session through a loopback
/// relay with a TCP drain downstream.
pub fn bench_relay(cfg: &BenchConfig) -> Result<RelayStats, RelayError> {
    if cfg.n_frames == 0 || !(cfg.rate > 0.0) {
        return Err(RelayError::Protocol(format!(
            "bench needs frames > 0 and rate > 0, got {} and {}",
            cfg.n_frames, cfg.rate
        )));
    }
    // base material: 10 s at the offered rate (144 Hz for flood runs),
    // replayed with shifted timestamps
    let data_rate = if cfg.rate.is_finite() {
        cfg.rate.min(1000.0)
    } else {
        144.0
    };
    let users =
        generate_population(2, cfg.seed).map_err(|e| RelayError::Protocol(e.to_string()))?;
    let rec = generate_session(&users[0], &SessionSpec::new(1, 10.0, data_rate), cfg.seed)
        .map_err(|e| RelayError::Protocol(e.to_string()))?;
    let height = estimate_height(&rec).map_err(|e| RelayError::Protocol(e.to_string()))?;
    let wingspan = estimate_wingspan(&rec).map_err(|e| RelayError::Protocol(e.to_string()))?;
    let cycle = rec.frames.len() as f64 / data_rate;

    let drain = TcpListener::bind("127.0.0.1:0")?;
    let drain_addr = drain.local_addr()?;
    let drainer = thread::spawn(move || -> std::io::Result<u64> {
        let (s, _) = drain.accept()?;
        let mut lines = 0u64;
        let mut r = BufReader::with_capacity(256 * 1024, s);
        let mut buf = Vec::new();
        while r.read_until(b'\n', &mut buf)? > 0 {
            lines += 1;
            buf.clear();
        }
        Ok(lines)
    });

    let relay = Relay::bind(
        "127.0.0.1:0",
        Sink::Tcp(drain_addr.to_string()),
        RelayOptions {
            eps: cfg.eps,
            master_seed: cfg.seed,
            calibrate: false,
        },
    )?;
    let handle = relay.handle();
    let relay_addr = relay.local_addr();
    let server = thread::spawn(move || relay.run());

    let send = || -> Result<(), RelayError> {
        let stream = TcpStream::connect(relay_addr)?;
        stream.set_nodelay(true)?;
        let mut w = BufWriter::with_capacity(64 * 1024, stream);
        let mut line = String::with_capacity(512);
        encode_message_into(
            &WireMessage::Hello(Hello {
                user: rec.user_id.clone(),
                session: rec.session_id.clone(),
                rate: data_rate,
                declared_height: Some(height),
                declared_wingspan: Some(wingspan),
            }),
            &mut line,
        );
        w.write_all(line.as_bytes())?;
        let paced = cfg.rate.is_finite();
        let start = Instant::now();
        for k in 0..cfg.n_frames {
            let i = (k % rec.frames.len() as u64) as usize;
            let mut f = rec.frames[i];
            f.t = round_sig9(f.t + (k / rec.frames.len() as u64) as f64 * cycle);
            line.clear();
            encode_message_into(&WireMessage::Frame(f), &mut line);
            if paced {
                let due = start + Duration::from_secs_f64(k as f64 / cfg.rate);
                let now = Instant::now();
                if due > now {
                    thread::sleep(due - now);
                }
            }
            w.write_all(line.as_bytes())?;
            if paced {
                w.flush()?;
            }
        }
        line.clear();
        encode_message_into(
            &WireMessage::Bye {
                frames: cfg.n_frames,
            },
            &mut line,
        );
        w.write_all(line.as_bytes())?;
        w.flush()?;
        Ok(())
    };
    let sent = send();
    if sent.is_err() {
        // unblock the drain if the relay never connected to it
        handle.shutdown();
        let _ = TcpStream::connect(drain_addr);
    }
    let drained = drainer
        .join()
        .map_err(|_| RelayError::Protocol("drain panicked".into()))?;
    handle.shutdown();
    let stats = server
        .join()
        .map_err(|_| RelayError::Protocol("relay panicked".into()))??;
    sent?;
    let drained = drained?;
    if drained != cfg.n_frames + 2 {
        return Err(RelayError::Protocol(format!(
            "drain saw {drained} lines, expected {}",
            cfg.n_frames + 2
        )));
    }
    Ok(stats)
}
