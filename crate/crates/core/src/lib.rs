//! Motion telemetry privacy toolkit.
//!
//! XR devices stream the position and orientation of the head and both hands
//! many times per second. This crate covers both sides of that stream:
//!
//! - [`attack`]: re-identify users from windowed summary features and infer
//!   body attributes (height, wingspan, handedness, tempo).
//! - [`privacy`]: a local differential privacy defense that draws per-session
//!   fake height and wingspan from a bounded Laplace mechanism and rewrites
//!   every frame so observers measure the fake values.
//! - [`relay`]: the defense deployed as a line-oriented TCP proxy.
//! - [`synth`]: a seeded synthetic population with ground truth for every
//!   experiment, and [`harness`] which wires everything into reproducible
//!   experiment reports.
//!
//! The data model lives in [`telemetry`]; featurization and the direct
//! attribute estimators in [`features`].

pub mod attack;
pub mod features;
pub mod harness;
pub mod privacy;
pub mod relay;
pub mod seed;
pub mod synth;
pub mod telemetry;

/// Toolkit version recorded in reports and model files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
