//! Per-connection state machine.

use std::io;

use super::wire::{decode_message, Hello, WireMessage};
use super::{RelayError, WireError};
use crate::features::{estimate_height, estimate_wingspan, MIN_ESTIMATE_SECONDS};
use crate::privacy::{apply_defense_frame, derive_defense_params, DefenseParams, EpsilonConfig};
use crate::telemetry::{write_frame_line, Frame, Recording};

/// Where a session's rewritten messages go.
pub trait Downstream {
    /// Session opens. `hello` carries the fake declared values.
    fn hello(&mut self, hello: &Hello, params: &DefenseParams) -> io::Result<()>;
    /// One frame line, without the trailing LF.
    fn frame(&mut self, line: &str) -> io::Result<()>;
    fn bye(&mut self, frames: u64) -> io::Result<()>;
    fn flush(&mut self) -> io::Result<()>;
}

/// What the connection loop should do after a line.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Continue,
    /// Line was dropped; the session continues.
    Rejected(WireError),
    /// `bye` received and forwarded.
    Finished,
}

#[derive(Debug)]
enum State {
    AwaitHello,
    Calibrating {
        hello: Hello,
        frames: Vec<Frame>,
        lines: Vec<String>,
    },
    Streaming {
        params: DefenseParams,
        last_t: f64,
    },
    Closed,
}

pub struct Session {
    cfg: EpsilonConfig,
    master_seed: u64,
    calibrate: bool,
    state: State,
    forwarded: u64,
    opened: bool,
    scratch: String,
}

impl Session {
    pub fn new(cfg: EpsilonConfig, master_seed: u64, calibrate: bool) -> Self {
        Self {
            cfg,
            master_seed,
            calibrate,
            state: State::AwaitHello,
            forwarded: 0,
            opened: false,
            scratch: String::with_capacity(320),
        }
    }

    /// Frames forwarded so far.
    pub fn forwarded(&self) -> u64 {
        self.forwarded
    }

    /// A hello has been forwarded downstream.
    pub fn opened(&self) -> bool {
        self.opened
    }

    pub fn params(&self) -> Option<&DefenseParams> {
        match &self.state {
            State::Streaming { params, .. } => Some(params),
            _ => None,
        }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self.state, State::Closed)
    }

    /// Feed one received line. Malformed lines are dropped and reported as
    /// [`Step::Rejected`]; ordering violations end the session with an error.
    pub fn on_line(&mut self, line: &[u8], out: &mut dyn Downstream) -> Result<Step, RelayError> {
        let msg = match decode_message(line) {
            Ok(m) => m,
            Err(e) => return Ok(Step::Rejected(e)),
        };
        let raw = || {
            std::str::from_utf8(line)
                .unwrap_or_default()
                .trim_end_matches(['\n', '\r'])
        };
        match (&mut self.state, msg) {
            (State::AwaitHello, WireMessage::Hello(h)) => {
                if self.calibrate {
                    self.state = State::Calibrating {
                        hello: h,
                        frames: Vec::new(),
                        lines: Vec::new(),
                    };
                } else {
                    let (Some(height), Some(wingspan)) = (h.declared_height, h.declared_wingspan)
                    else {
                        return self.violation("hello without declared attributes");
                    };
                    self.open(&h, height, wingspan, out)?;
                }
                Ok(Step::Continue)
            }
            (State::AwaitHello, _) => self.violation("message before hello"),
            (
                State::Calibrating {
                    hello,
                    frames,
                    lines,
                },
                WireMessage::Frame(f),
            ) => {
                if let Some(prev) = frames.last() {
                    if !(f.t > prev.t) {
                        return self.violation("timestamps must strictly increase");
                    }
                }
                frames.push(f);
                lines.push(raw().to_owned());
                let span = frames[frames.len() - 1].t - frames[0].t + 1.0 / hello.rate;
                if span >= MIN_ESTIMATE_SECONDS {
                    let rec = Recording::new(
                        hello.user.clone(),
                        hello.session.clone(),
                        hello.rate,
                        std::mem::take(frames),
                    );
                    let lines = std::mem::take(lines);
                    let hello = hello.clone();
                    let (height, wingspan) = match (estimate_height(&rec), estimate_wingspan(&rec))
                    {
                        (Ok(h), Ok(w)) => (h, w),
                        (Err(e), _) | (_, Err(e)) => {
                            return self.violation(&format!("calibration failed: {e}"))
                        }
                    };
                    self.open(&hello, height, wingspan, out)?;
                    for (f, line) in rec.frames.iter().zip(&lines) {
                        self.forward(f, line, out)?;
                    }
                    if let State::Streaming { last_t, .. } = &mut self.state {
                        *last_t = rec.frames[rec.frames.len() - 1].t;
                    }
                }
                Ok(Step::Continue)
            }
            (State::Calibrating { .. }, WireMessage::Bye { .. }) => {
                self.violation("bye before calibration completed")
            }
            (State::Streaming { last_t, .. }, WireMessage::Frame(f)) => {
                if !(f.t > *last_t) {
                    return self.violation("timestamps must strictly increase");
                }
                *last_t = f.t;
                self.forward(&f, raw(), out)?;
                Ok(Step::Continue)
            }
            (State::Streaming { .. }, WireMessage::Bye { frames }) => {
                if frames != self.forwarded {
                    return self.violation(&format!(
                        "bye reports {frames} frames, {} received",
                        self.forwarded
                    ));
                }
                out.bye(frames)?;
                out.flush()?;
                self.state = State::Closed;
                Ok(Step::Finished)
            }
            (State::Closed, _) => self.violation("message after bye"),
            (_, WireMessage::Hello(_)) => self.violation("second hello"),
        }
    }

    fn violation(&mut self, what: &str) -> Result<Step, RelayError> {
        self.state = State::Closed;
        Err(RelayError::Protocol(what.to_owned()))
    }

    fn open(
        &mut self,
        hello: &Hello,
        height: f64,
        wingspan: f64,
        out: &mut dyn Downstream,
    ) -> Result<(), RelayError> {
        let params = derive_defense_params(
            height,
            wingspan,
            &self.cfg,
            self.master_seed,
            &hello.user,
            &hello.session,
        )?;
        let forwarded = Hello {
            declared_height: Some(params.fake_height),
            declared_wingspan: Some(params.fake_wingspan),
            ..hello.clone()
        };
        out.hello(&forwarded, &params)?;
        self.opened = true;
        self.state = State::Streaming {
            params,
            last_t: f64::NEG_INFINITY,
        };
        Ok(())
    }

    fn forward(
        &mut self,
        f: &Frame,
        raw: &str,
        out: &mut dyn Downstream,
    ) -> Result<(), RelayError> {
        let State::Streaming { params, .. } = &self.state else {
            unreachable!("forward outside streaming state")
        };
        if params.is_identity() {
            out.frame(raw)?;
        } else {
            self.scratch.clear();
            write_frame_line(&apply_defense_frame(params, f), &mut self.scratch);
            out.frame(&self.scratch)?;
        }
        self.forwarded += 1;
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::relay::wire::encode_message;
    use crate::synth::{generate_population, generate_session, SessionSpec};
    use crate::telemetry::{parse_recording, serialize_recording};

    /// Collects everything in recording format.
    #[derive(Default)]
    pub(crate) struct Collect {
        pub hello: Option<Hello>,
        pub lines: Vec<String>,
        pub bye: Option<u64>,
    }

    impl Downstream for Collect {
        fn hello(&mut self, hello: &Hello, _: &DefenseParams) -> io::Result<()> {
            self.hello = Some(hello.clone());
            Ok(())
        }
        fn frame(&mut self, line: &str) -> io::Result<()> {
            self.lines.push(line.to_owned());
            Ok(())
        }
        fn bye(&mut self, frames: u64) -> io::Result<()> {
            self.bye = Some(frames);
            Ok(())
        }
        fn flush(&mut self) -> io::Result<()> {
            Ok(())
        }
    }

    fn session_lines(declared: Option<(f64, f64)>) -> (Recording, Vec<Vec<u8>>) {
        let users = generate_population(2, 3).unwrap();
        let rec = generate_session(&users[0], &SessionSpec::new(1, 4.0, 30.0), 3).unwrap();
        let mut lines = vec![encode_message(&WireMessage::Hello(Hello {
            user: rec.user_id.clone(),
            session: rec.session_id.clone(),
            rate: rec.rate,
            declared_height: declared.map(|d| d.0),
            declared_wingspan: declared.map(|d| d.1),
        }))];
        for f in &rec.frames {
            lines.push(encode_message(&WireMessage::Frame(*f)));
        }
        lines.push(encode_message(&WireMessage::Bye {
            frames: rec.frames.len() as u64,
        }));
        (rec, lines)
    }

    fn run(s: &mut Session, lines: &[Vec<u8>]) -> Collect {
        let mut c = Collect::default();
        for l in lines {
            s.on_line(l, &mut c).unwrap();
        }
        c
    }

    #[test]
    fn identity_forwards_bytes() {
        let (rec, lines) = session_lines(Some((1.7, 1.7)));
        let mut s = Session::new(EpsilonConfig::disabled(), 1, false);
        let c = run(&mut s, &lines);
        assert_eq!(c.bye, Some(rec.frames.len() as u64));
        for (out, inp) in c.lines.iter().zip(&lines[1..]) {
            assert_eq!(format!("{out}\n").as_bytes(), &inp[..]);
        }
        let h = c.hello.unwrap();
        assert_eq!(h.declared_height, Some(1.7));
    }

    #[test]
    fn defended_output_carries_fake_values() {
        let (_, lines) = session_lines(Some((1.7, 1.7)));
        let mut s = Session::new(EpsilonConfig::uniform(0.5).unwrap(), 1, false);
        let c = run(&mut s, &lines);
        let p = s.params().cloned();
        assert!(p.is_none(), "closed after bye");
        let h = c.hello.unwrap();
        assert_ne!(h.declared_height, Some(1.7));
        assert_ne!(c.lines[0].as_bytes(), &lines[1][..lines[1].len() - 1]);
    }

    #[test]
    fn ordering_violations_close() {
        let (_, lines) = session_lines(Some((1.7, 1.7)));
        let mut c = Collect::default();

        let mut s = Session::new(EpsilonConfig::default(), 1, false);
        assert!(matches!(
            s.on_line(&lines[1], &mut c),
            Err(RelayError::Protocol(_))
        ));
        assert!(s.is_closed());

        let mut s = Session::new(EpsilonConfig::default(), 1, false);
        s.on_line(&lines[0], &mut c).unwrap();
        assert!(s.on_line(&lines[0], &mut c).is_err());

        let mut s = Session::new(EpsilonConfig::default(), 1, false);
        s.on_line(&lines[0], &mut c).unwrap();
        s.on_line(&lines[2], &mut c).unwrap();
        assert!(s.on_line(&lines[1], &mut c).is_err(), "time went backwards");

        let mut s = Session::new(EpsilonConfig::default(), 1, false);
        s.on_line(&lines[0], &mut c).unwrap();
        assert!(s.on_line(br#"{"kind":"bye","frames":5}"#, &mut c).is_err());

        let mut s = Session::new(EpsilonConfig::default(), 1, false);
        let (_, undeclared) = session_lines(None);
        assert!(s.on_line(&undeclared[0], &mut c).is_err());
    }

    #[test]
    fn malformed_line_is_dropped() {
        let (_, lines) = session_lines(Some((1.7, 1.7)));
        let mut c = Collect::default();
        let mut s = Session::new(EpsilonConfig::default(), 1, false);
        s.on_line(&lines[0], &mut c).unwrap();
        assert!(matches!(
            s.on_line(b"{\"t\":", &mut c).unwrap(),
            Step::Rejected(WireError::Malformed(_))
        ));
        assert_eq!(s.on_line(&lines[1], &mut c).unwrap(), Step::Continue);
        assert_eq!(s.forwarded(), 1);
    }

    #[test]
    fn calibrate_mode_estimates_then_streams() {
        let (rec, lines) = session_lines(None);
        let mut s = Session::new(EpsilonConfig::disabled(), 1, true);
        let c = run(&mut s, &lines);
        assert_eq!(c.lines.len(), rec.frames.len());
        let h = c.hello.unwrap();
        let early = rec.with_frames(rec.frames[..60].to_vec());
        assert_eq!(h.declared_height, Some(estimate_height(&early).unwrap()));

        // identity defense: the rebuilt recording equals the input
        let mut text = String::new();
        crate::telemetry::write_meta_line(&rec.user_id, &rec.session_id, rec.rate, &mut text);
        text.push('\n');
        for l in &c.lines {
            text.push_str(l);
            text.push('\n');
        }
        assert_eq!(text, serialize_recording(&rec));
        assert_eq!(parse_recording(&text).unwrap(), rec);
    }
}
