use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use log::{debug, info, warn};

use super::session::{Downstream, Session, Step};
use super::wire::{write_bye, write_hello, Hello};
use super::{RelayError, RelayStats, StatsAccumulator};
use crate::privacy::{DefenseParams, EpsilonConfig};
use crate::telemetry::write_meta_line;

/// How often an idle connection checks for shutdown.
const POLL: Duration = Duration::from_millis(100);
/// Frames held back before a forced flush while input keeps arriving.
const FLUSH_BATCH: usize = 64;

/// Where relayed sessions go.
#[derive(Debug, Clone, PartialEq)]
pub enum Sink {
    /// Forward wire messages to a downstream TCP endpoint, one downstream
    /// connection per upstream connection.
    Tcp(String),
    /// Write recordings (meta line plus frame lines) to one file. Sessions
    /// are written one after another; a second connection waits for the
    /// first to finish.
    File(PathBuf),
    /// Write each session to `<dir>/<user>_<session>.jsonl`.
    Directory(PathBuf),
}

impl Sink {
    /// `--out` target: an existing directory gets one file per session.
    pub fn from_out(path: &Path) -> Self {
        if path.is_dir() {
            Sink::Directory(path.to_owned())
        } else {
            Sink::File(path.to_owned())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayOptions {
    pub eps: EpsilonConfig,
    pub master_seed: u64,
    /// Estimate attributes from the first 2 s instead of trusting `hello`.
    pub calibrate: bool,
}

enum SinkState {
    Tcp(SocketAddr),
    File(Mutex<BufWriter<File>>),
    Directory(PathBuf),
}

struct Shared {
    sink: SinkState,
    opts: RelayOptions,
    shutdown: Arc<AtomicBool>,
    stats: Mutex<StatsAccumulator>,
}

pub struct Relay {
    listener: TcpListener,
    addr: SocketAddr,
    shared: Arc<Shared>,
}

/// Stops a running relay from another thread.
#[derive(Debug, Clone)]
pub struct RelayHandle {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
}

impl RelayHandle {
    pub fn shutdown(&self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
    }
}

impl Relay {
    pub fn bind(listen: &str, sink: Sink, opts: RelayOptions) -> Result<Self, RelayError> {
        opts.eps.validate()?;
        let sink = match sink {
            Sink::Tcp(target) => {
                let addr = target
                    .to_socket_addrs()
                    .ok()
                    .and_then(|mut a| a.next())
                    .ok_or_else(|| {
                        RelayError::SinkUnavailable(format!("cannot resolve {target}"))
                    })?;
                SinkState::Tcp(addr)
            }
            Sink::File(path) => {
                let f = File::create(&path)
                    .map_err(|e| RelayError::SinkUnavailable(format!("{}: {e}", path.display())))?;
                SinkState::File(Mutex::new(BufWriter::new(f)))
            }
            Sink::Directory(dir) => {
                if !dir.is_dir() {
                    return Err(RelayError::SinkUnavailable(format!(
                        "{} is not a directory",
                        dir.display()
                    )));
                }
                SinkState::Directory(dir)
            }
        };
        let listener = TcpListener::bind(listen).map_err(|source| RelayError::Bind {
            addr: listen.to_owned(),
            source,
        })?;
        let addr = listener.local_addr()?;
        Ok(Self {
            listener,
            addr,
            shared: Arc::new(Shared {
                sink,
                opts,
                shutdown: Arc::new(AtomicBool::new(false)),
                stats: Mutex::new(StatsAccumulator::default()),
            }),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn handle(&self) -> RelayHandle {
        RelayHandle {
            addr: self.addr,
            shutdown: Arc::clone(&self.shared.shutdown),
        }
    }

    /// Serve until [`RelayHandle::shutdown`]. Open connections are closed
    /// at their next idle poll; the returned stats cover every connection.
    pub fn run(self) -> Result<RelayStats, RelayError> {
        let started = Instant::now();
        info!("relay listening on {}", self.addr);
        let mut workers: Vec<JoinHandle<()>> = Vec::new();
        for conn in self.listener.incoming() {
            if self.shared.shutdown.load(Ordering::SeqCst) {
                break;
            }
            let stream = match conn {
                Ok(s) => s,
                Err(e) => {
                    warn!("accept failed: {e}");
                    continue;
                }
            };
            let shared = Arc::clone(&self.shared);
            workers.push(thread::spawn(move || serve(stream, &shared)));
            workers.retain(|w| !w.is_finished());
        }
        for w in workers {
            if w.join().is_err() {
                warn!("connection thread panicked");
            }
        }
        let shared = Arc::into_inner(self.shared).expect("all workers joined");
        if let SinkState::File(f) = &shared.sink {
            lock(f).flush()?;
        }
        let stats = shared
            .stats
            .into_inner()
            .unwrap_or_else(|p| p.into_inner())
            .finish(started.elapsed().as_secs_f64());
        info!(
            "relay stopped: {} frames over {} sessions, {} rejected",
            stats.frames_relayed, stats.sessions, stats.rejected_messages
        );
        Ok(stats)
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

/// File names come from client-supplied ids; keep them inside the sink
/// directory.
fn safe_name(id: &str) -> String {
    let s: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    s.trim_start_matches('.').to_owned()
}

fn write_recording_head(w: &mut impl Write, h: &Hello) -> io::Result<()> {
    let mut line = String::new();
    write_meta_line(&h.user, &h.session, h.rate, &mut line);
    line.push('\n');
    w.write_all(line.as_bytes())
}

enum Target<'a> {
    Pending,
    Tcp(BufWriter<TcpStream>),
    File(MutexGuard<'a, BufWriter<File>>),
    Directory(BufWriter<File>),
}

struct SinkWriter<'a> {
    sink: &'a SinkState,
    target: Target<'a>,
    line: String,
}

impl SinkWriter<'_> {
    fn writer(&mut self) -> io::Result<&mut dyn Write> {
        Ok(match &mut self.target {
            Target::Pending => return Err(io::Error::other("no session open")),
            Target::Tcp(w) => w,
            Target::File(w) => &mut **w,
            Target::Directory(w) => w,
        })
    }
}

impl Downstream for SinkWriter<'_> {
    fn hello(&mut self, hello: &Hello, params: &DefenseParams) -> io::Result<()> {
        debug!(
            "{}/{}: height x{:.4}, wingspan x{:.4}",
            params.user_id, params.session_id, params.height_gain, params.wingspan_gain
        );
        self.target = match self.sink {
            SinkState::Tcp(addr) => {
                let s = TcpStream::connect(addr).map_err(|e| {
                    io::Error::new(e.kind(), format!("sink {addr} unavailable: {e}"))
                })?;
                s.set_nodelay(true)?;
                let mut w = BufWriter::with_capacity(64 * 1024, s);
                self.line.clear();
                write_hello(hello, &mut self.line);
                self.line.push('\n');
                w.write_all(self.line.as_bytes())?;
                Target::Tcp(w)
            }
            SinkState::File(m) => {
                let mut g = lock(m);
                write_recording_head(&mut *g, hello)?;
                Target::File(g)
            }
            SinkState::Directory(dir) => {
                let name = format!(
                    "{}_{}.jsonl",
                    safe_name(&hello.user),
                    safe_name(&hello.session)
                );
                let mut w = BufWriter::new(File::create(dir.join(name))?);
                write_recording_head(&mut w, hello)?;
                Target::Directory(w)
            }
        };
        Ok(())
    }

    fn frame(&mut self, line: &str) -> io::Result<()> {
        let w = self.writer()?;
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")
    }

    fn bye(&mut self, frames: u64) -> io::Result<()> {
        if let Target::Tcp(w) = &mut self.target {
            self.line.clear();
            write_bye(frames, &mut self.line);
            self.line.push('\n');
            w.write_all(self.line.as_bytes())?;
        }
        Ok(())
    }

    fn flush(&mut self) -> io::Result<()> {
        match &mut self.target {
            Target::Pending => Ok(()),
            _ => self.writer()?.flush(),
        }
    }
}

fn serve(stream: TcpStream, shared: &Shared) {
    let peer = stream
        .peer_addr()
        .map(|a| a.to_string())
        .unwrap_or_else(|_| "?".into());
    let mut acc = StatsAccumulator::default();
    if let Err(e) = serve_inner(stream, shared, &mut acc) {
        warn!("{peer}: connection closed: {e}");
    }
    lock(&shared.stats).merge(acc);
}

fn serve_inner(
    stream: TcpStream,
    shared: &Shared,
    acc: &mut StatsAccumulator,
) -> Result<(), RelayError> {
    stream.set_read_timeout(Some(POLL))?;
    stream.set_nodelay(true)?;
    let mut reader = BufReader::with_capacity(64 * 1024, stream);
    let mut out = SinkWriter {
        sink: &shared.sink,
        target: Target::Pending,
        line: String::new(),
    };
    let opts = &shared.opts;
    let mut session = Session::new(opts.eps, opts.master_seed, opts.calibrate);
    let mut buf: Vec<u8> = Vec::with_capacity(512);
    let mut pending: Vec<Instant> = Vec::new();

    let result = loop {
        match reader.read_until(b'\n', &mut buf) {
            Ok(0) => break Ok(()),
            Ok(_) if buf.last() != Some(&b'\n') => {
                // stream ended mid-line
                acc.rejected += 1;
                break Ok(());
            }
            Ok(_) => {}
            Err(e)
                if matches!(
                    e.kind(),
                    io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                ) =>
            {
                if shared.shutdown.load(Ordering::SeqCst) {
                    break Ok(());
                }
                continue;
            }
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => break Err(e.into()),
        }
        let received = Instant::now();
        let before = session.forwarded();
        let step = session.on_line(&buf, &mut out);
        buf.clear();
        for _ in before..session.forwarded() {
            pending.push(received);
        }
        match step {
            Ok(Step::Continue) => {}
            Ok(Step::Rejected(e)) => {
                acc.rejected += 1;
                warn!("dropped line: {e}");
            }
            Ok(Step::Finished) => break Ok(()),
            Err(e) => {
                acc.rejected += 1;
                break Err(e);
            }
        }
        // flush once everything already received has been processed, or
        // every batch under sustained load
        if !pending.is_empty() && (reader.buffer().is_empty() || pending.len() >= FLUSH_BATCH) {
            out.flush()?;
            let done = Instant::now();
            acc.first = acc.first.or(Some(pending[0]));
            acc.last = Some(done);
            acc.latencies_us
                .extend(pending.drain(..).map(|t| (done - t).as_secs_f64() * 1e6));
        }
    };
    let flushed = out.flush();
    let done = Instant::now();
    if !pending.is_empty() {
        acc.first = acc.first.or(Some(pending[0]));
        acc.last = Some(done);
        acc.latencies_us
            .extend(pending.drain(..).map(|t| (done - t).as_secs_f64() * 1e6));
    }
    acc.frames += session.forwarded();
    acc.sessions += u64::from(session.opened());
    result.and(flushed.map_err(Into::into))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_cannot_escape_the_directory() {
        assert_eq!(safe_name("../../etc/passwd"), "_.._etc_passwd");
        assert_eq!(safe_name("u001"), "u001");
        assert_eq!(safe_name(".hidden"), "hidden");
    }

    #[test]
    fn bind_reports_bad_sinks() {
        let opts = RelayOptions {
            eps: EpsilonConfig::default(),
            master_seed: 1,
            calibrate: false,
        };
        assert!(matches!(
            Relay::bind(
                "127.0.0.1:0",
                Sink::Directory("/nonexistent/dir".into()),
                opts
            ),
            Err(RelayError::SinkUnavailable(_))
        ));
        assert!(matches!(
            Relay::bind("127.0.0.1:0", Sink::Tcp("not an address".into()), opts),
            Err(RelayError::SinkUnavailable(_))
        ));
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            Relay::bind("256.0.0.1:1", Sink::Directory(dir.path().into()), opts),
            Err(RelayError::Bind { .. })
        ));
    }
}
