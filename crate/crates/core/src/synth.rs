//! Seeded synthetic population and motion generator.
//!
//! Every user gets ground-truth anthropometrics, a tempo, a dominant hand and
//! eight style parameters. Sessions are a sinusoid-plus-noise motion model:
//! the head bobs at half the tempo below eye level, and both hands make one
//! outward stroke per beat, reaching full lateral extension together at the
//! top of each stroke. The geometry is arranged so that the upper-percentile
//! estimators in [`crate::features`] recover height and wingspan.

use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::HEAD_TO_HEIGHT;
use crate::privacy::{DEFAULT_HEIGHT_BOUNDS, DEFAULT_WINGSPAN_BOUNDS};
use crate::seed;
use crate::telemetry::{quat_from_euler, round_sig9, serialize_recording, Frame, Pose, Recording};

/// Shoulder anchor sits this fraction of height below the head tracker.
pub const SHOULDER_DROP: f64 = 0.25;
pub const DOMINANT_AMPLITUDE: f64 = 1.25;
pub const OFF_HAND_AMPLITUDE: f64 = 0.8;
pub const P_RIGHT_HANDED: f64 = 0.9;

const HEIGHT_MEAN: f64 = 1.70;
const HEIGHT_SD: f64 = 0.09;
const RATIO_MEAN: f64 = 1.01;
const RATIO_SD: f64 = 0.03;
const TEMPO_RANGE: (f64, f64) = (0.8, 2.5);
const HEAD_BOB_M: f64 = 0.02;
const HEAD_SWAY_RAD: f64 = 10.0 * PI / 180.0;

// reach contraction, downward elevation and forward swing per unit amplitude
const REACH_CONTRACTION: f64 = 0.3;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("population needs at least 2 users, got {0}")]
    PopulationTooSmall(usize),
    #[error("invalid session spec: {0}")]
    InvalidSession(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Handedness {
    Left,
    Right,
}

impl Handedness {
    pub fn is_right(self) -> bool {
        self == Handedness::Right
    }
}

/// Per-user motion style, drawn once from seeded normals. Spreads are kept
/// close to the session-to-session jitter, so most of a user's identity sits
/// in body geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Style {
    /// Overall stroke amplitude multiplier.
    pub amplitude: f64,
    /// Downward arm elevation at full stroke, rad.
    pub elevation: f64,
    /// Forward swing at full stroke, rad.
    pub forward: f64,
    /// Amplitude of the vertical wobble on top of the stroke, rad.
    pub wobble: f64,
    /// Phase of that wobble relative to the stroke, rad.
    pub wobble_phase: f64,
    /// Forward torso lean, rad (head pitch).
    pub lean: f64,
    /// Resting head yaw, rad.
    pub head_yaw: f64,
    /// Wrist roll offset, rad.
    pub wrist_roll: f64,
}

impl Style {
    fn draw<R: Rng>(rng: &mut R) -> Self {
        let mut normal = |mean: f64, sd: f64| Normal::new(mean, sd).unwrap().sample(rng);
        Style {
            amplitude: normal(1.0, 0.03).clamp(0.9, 1.1),
            elevation: normal(0.45, 0.02).clamp(0.35, 0.55),
            forward: normal(0.55, 0.025).clamp(0.45, 0.65),
            wobble: normal(0.08, 0.005).clamp(0.05, 0.11),
            wobble_phase: normal(0.0, 0.2),
            lean: normal(0.0, 0.005),
            head_yaw: normal(0.0, 0.005),
            wrist_roll: normal(0.0, 0.008),
        }
    }

    pub fn to_array(self) -> [f64; 8] {
        [
            self.amplitude,
            self.elevation,
            self.forward,
            self.wobble,
            self.wobble_phase,
            self.lean,
            self.head_yaw,
            self.wrist_roll,
        ]
    }
}

/// Ground truth for one synthetic user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub height_m: f64,
    pub wingspan_m: f64,
    pub tempo_hz: f64,
    pub handedness: Handedness,
    pub style: Style,
}

/// Sensor noise scales. [`NoiseModel::none`] gives the exact geometry used
/// by estimator oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Head vertical jitter, m.
    pub head_jitter: f64,
    /// Hand position noise per axis, m.
    pub hand_noise: f64,
    /// Standard deviation of the slow horizontal head drift, m.
    pub drift: f64,
    /// Orientation jitter per Euler angle, rad.
    pub orientation: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            head_jitter: 0.003,
            hand_noise: 0.005,
            drift: 0.05,
            orientation: 0.01,
        }
    }
}

impl NoiseModel {
    pub const fn none() -> Self {
        Self {
            head_jitter: 0.0,
            hand_noise: 0.0,
            drift: 0.0,
            orientation: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    /// 1-based session number; the session id is `s{index:02}`.
    pub index: u32,
    pub duration_s: f64,
    pub rate_hz: f64,
    /// Relative amplitude jitter between sessions (uniform, +/-).
    pub amplitude_jitter: f64,
    /// Relative tempo jitter between sessions (uniform, +/-).
    pub tempo_jitter: f64,
    pub noise: NoiseModel,
}

impl SessionSpec {
    pub fn new(index: u32, duration_s: f64, rate_hz: f64) -> Self {
        Self {
            index,
            duration_s,
            rate_hz,
            amplitude_jitter: 0.02,
            tempo_jitter: 0.03,
            noise: NoiseModel::default(),
        }
    }

    pub fn noise_free(mut self) -> Self {
        self.noise = NoiseModel::none();
        self
    }

    pub fn session_id(&self) -> String {
        session_id(self.index)
    }
}

pub fn session_id(index: u32) -> String {
    format!("s{index:02}")
}

pub fn user_id(index: usize) -> String {
    format!("u{:04}", index + 1)
}

fn draw_profile(index: usize, seed: u64) -> UserProfile {
    let uid = user_id(index);
    let mut rng = seed::rng(seed, &["user", &uid]);
    let (h_lo, h_hi) = DEFAULT_HEIGHT_BOUNDS;
    let (w_lo, w_hi) = DEFAULT_WINGSPAN_BOUNDS;
    let height = Normal::new(HEIGHT_MEAN, HEIGHT_SD)
        .unwrap()
        .sample(&mut rng)
        .clamp(h_lo, h_hi);
    let ratio = Normal::new(RATIO_MEAN, RATIO_SD).unwrap().sample(&mut rng);
    let wingspan = (height * ratio).clamp(w_lo, w_hi);
    let tempo = rng.random_range(TEMPO_RANGE.0..TEMPO_RANGE.1);
    let handedness = if rng.random_bool(P_RIGHT_HANDED) {
        Handedness::Right
    } else {
        Handedness::Left
    };
    let style = Style::draw(&mut rng);
    UserProfile {
        user_id: uid,
        height_m: height,
        wingspan_m: wingspan,
        tempo_hz: tempo,
        handedness,
        style,
    }
}

/// `n` independent users `u0001..`, each a pure function of `(seed, index)`.
pub fn generate_population(n: usize, seed: u64) -> Result<Vec<UserProfile>, SynthError> {
    if n < 2 {
        return Err(SynthError::PopulationTooSmall(n));
    }
    Ok((0..n).map(|i| draw_profile(i, seed)).collect())
}

/// Band-limited random walk substitute: a few slow sinusoids with random
/// phases, scaled to standard deviation `sd`.
struct Drift {
    terms: Vec<(f64, f64, f64)>,
}

impl Drift {
    fn new<R: Rng>(rng: &mut R, sd: f64) -> Self {
        const FREQS: [f64; 3] = [0.013, 0.031, 0.067];
        // each unit sinusoid has variance 1/2
        let amp = sd * (2.0 / FREQS.len() as f64).sqrt();
        let terms = FREQS
            .iter()
            .map(|&f| {
                let f = f * rng.random_range(0.8..1.25);
                (amp, f, rng.random_range(0.0..TAU))
            })
            .collect();
        Self { terms }
    }

    fn at(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|(a, f, p)| a * (TAU * f * t + p).sin())
            .sum()
    }
}

fn gaussian<R: Rng>(rng: &mut R, sd: f64) -> f64 {
    if sd == 0.0 {
        0.0
    } else {
        Normal::new(0.0, sd).unwrap().sample(rng)
    }
}

fn quantize3(v: [f64; 3]) -> [f64; 3] {
    v.map(round_sig9)
}

fn quantized_pose(position: [f64; 3], yaw: f64, pitch: f64, roll: f64) -> Pose {
    let q = quat_from_euler(yaw, pitch, roll).normalized();
    Pose::new(
        quantize3(position),
        crate::telemetry::Quat::from_array(q.to_array().map(round_sig9)),
    )
}

/// Generate one session for `profile`. Output values sit on the 9-digit
/// serialization grid, so recordings round-trip through JSONL losslessly.
pub fn generate_session(
    profile: &UserProfile,
    spec: &SessionSpec,
    seed: u64,
) -> Result<Recording, SynthError> {
    if !(spec.duration_s > 0.0) || !(1.0..=1000.0).contains(&spec.rate_hz) {
        return Err(SynthError::InvalidSession(format!(
            "duration {} s, rate {} Hz",
            spec.duration_s, spec.rate_hz
        )));
    }
    let sid = spec.session_id();
    let mut rng = seed::rng(seed, &["session", &profile.user_id, &sid]);

    let amp_j = 1.0 + rng.random_range(-1.0..=1.0) * spec.amplitude_jitter;
    let tempo = profile.tempo_hz * (1.0 + rng.random_range(-1.0..=1.0) * spec.tempo_jitter);
    let stroke_phase = rng.random_range(0.0..TAU);
    let bob_phase = rng.random_range(0.0..TAU);
    let sway_phase = rng.random_range(0.0..TAU);
    let wobble_phase = profile.style.wobble_phase + gaussian(&mut rng, 0.1);
    let drift_x = Drift::new(&mut rng, spec.noise.drift);
    let drift_z = Drift::new(&mut rng, spec.noise.drift);

    let st = profile.style;
    let h = profile.height_m;
    let half_span = profile.wingspan_m / 2.0;
    let (dom, off) = (
        DOMINANT_AMPLITUDE * st.amplitude * amp_j,
        OFF_HAND_AMPLITUDE * st.amplitude * amp_j,
    );
    let (right_amp, left_amp) = if profile.handedness.is_right() {
        (dom, off)
    } else {
        (off, dom)
    };

    let n = (spec.duration_s * spec.rate_hz).round().max(1.0) as usize;
    let noise = spec.noise;
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let t = round_sig9(i as f64 / spec.rate_hz);

        // head: eye level minus a downward bob at half the tempo
        let bob = HEAD_BOB_M * ((TAU * (tempo / 2.0) * t + bob_phase).sin() - 1.0);
        let head_p = [
            drift_x.at(t),
            HEAD_TO_HEIGHT * h + bob + gaussian(&mut rng, noise.head_jitter),
            drift_z.at(t),
        ];
        let head_yaw = st.head_yaw
            + HEAD_SWAY_RAD * (TAU * (tempo / 4.0) * t + sway_phase).sin()
            + gaussian(&mut rng, noise.orientation);
        let head_pitch = st.lean + gaussian(&mut rng, noise.orientation);
        let head_roll = gaussian(&mut rng, noise.orientation);

        // stroke: s = 0 at full lateral extension, once per beat
        let x = PI * tempo * t + stroke_phase;
        let s = 1.0 - x.sin().abs();
        let anchor = [head_p[0], head_p[1] - SHOULDER_DROP * h, head_p[2]];

        let hand = |side: f64, amp: f64, rng: &mut rand_chacha::ChaCha8Rng| {
            let reach = half_span * (1.0 - REACH_CONTRACTION * amp * s);
            let wobble = st.wobble * (2.0 * x + wobble_phase).sin() * s;
            let elev = (st.elevation * amp + wobble) * s;
            let fwd = st.forward * amp * s;
            let p = [
                anchor[0] + side * reach * elev.cos() * fwd.cos() + gaussian(rng, noise.hand_noise),
                anchor[1] - reach * elev.sin() + gaussian(rng, noise.hand_noise),
                anchor[2] - reach * elev.cos() * fwd.sin() + gaussian(rng, noise.hand_noise),
            ];
            let yaw = -side * fwd + gaussian(rng, noise.orientation);
            let pitch = -0.5 * elev + gaussian(rng, noise.orientation);
            let roll = side * (st.wrist_roll + 0.3 * s) + gaussian(rng, noise.orientation);
            quantized_pose(p, yaw, pitch, roll)
        };
        let left = hand(-1.0, left_amp, &mut rng);
        let right = hand(1.0, right_amp, &mut rng);

        frames.push(Frame {
            t,
            head: quantized_pose(head_p, head_yaw, head_pitch, head_roll),
            left,
            right,
        });
    }
    Ok(Recording::new(
        profile.user_id.clone(),
        sid,
        spec.rate_hz,
        frames,
    ))
}

/// Ground-truth attributes as stored in the population manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub user_id: String,
    pub height: f64,
    pub wingspan: f64,
    pub tempo: f64,
    pub handedness: Handedness,
}

impl From<&UserProfile> for GroundTruth {
    fn from(p: &UserProfile) -> Self {
        Self {
            user_id: p.user_id.clone(),
            height: p.height_m,
            wingspan: p.wingspan_m,
            tempo: p.tempo_hz,
            handedness: p.handedness,
        }
    }
}

/// Manifest CSV: `user_id,height,wingspan,tempo,handedness`.
pub fn write_manifest<W: Write>(out: W, users: &[UserProfile]) -> Result<(), SynthError> {
    let mut w = csv::Writer::from_writer(out);
    for u in users {
        w.serialize(GroundTruth::from(u))
            .map_err(|e| SynthError::Manifest(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest<R: Read>(input: R) -> Result<Vec<GroundTruth>, SynthError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<Result<Vec<GroundTruth>, _>>()
        .map_err(|e| SynthError::Manifest(e.to_string()))
}

/// Write `<user>_<session>.jsonl` into `dir`, returning the path.
pub fn write_recording(dir: &Path, r: &Recording) -> Result<std::path::PathBuf, SynthError> {
    let path = dir.join(format!("{}_{}.jsonl", r.user_id, r.session_id));
    std::fs::write(&path, serialize_recording(r))?;
    Ok(path)
}
