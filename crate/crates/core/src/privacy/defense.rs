use log::warn;
use serde::{Deserialize, Serialize};

use super::{BoundedLaplace, EpsilonConfig, PrivacyError};
use crate::features::{estimate_height, estimate_wingspan};
use crate::seed;
use crate::telemetry::{self, Frame, Recording, Vec3};

/// Per-session transform. Derived once per `(user, session)` and applied to
/// every frame of that session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefenseParams {
    pub user_id: String,
    pub session_id: String,
    pub true_height: f64,
    pub true_wingspan: f64,
    pub fake_height: f64,
    pub fake_wingspan: f64,
    /// `fake_height / true_height`.
    pub height_gain: f64,
    /// `fake_wingspan / true_wingspan`.
    pub wingspan_gain: f64,
    /// A true value fell outside its bounds and was clamped before noising.
    pub clamped: bool,
}

impl DefenseParams {
    pub fn is_identity(&self) -> bool {
        self.height_gain == 1.0 && self.wingspan_gain == 1.0
    }
}

fn draw(
    rng: &mut rand_chacha::ChaCha8Rng,
    value: f64,
    eps: f64,
    bounds: super::Bounds,
    clamped: &mut bool,
) -> Result<f64, PrivacyError> {
    if eps.is_infinite() {
        return Ok(value);
    }
    let center = if bounds.contains(value) {
        value
    } else {
        *clamped = true;
        bounds.clamp(value)
    };
    BoundedLaplace::new(eps, bounds)?.sample(rng, center)
}

/// Draw the session's fake height and wingspan. The generator is keyed by
/// `(master_seed, user_id, session_id)`, so the result is a pure function of
/// its arguments. An infinite epsilon passes that attribute through.
pub fn derive_defense_params(
    true_height: f64,
    true_wingspan: f64,
    cfg: &EpsilonConfig,
    master_seed: u64,
    user_id: &str,
    session_id: &str,
) -> Result<DefenseParams, PrivacyError> {
    cfg.validate()?;
    let mut rng = seed::rng(master_seed, &["defense", user_id, session_id]);
    let mut clamped = false;
    let fake_height = draw(
        &mut rng,
        true_height,
        cfg.eps_height,
        cfg.bounds_height,
        &mut clamped,
    )?;
    let fake_wingspan = draw(
        &mut rng,
        true_wingspan,
        cfg.eps_wingspan,
        cfg.bounds_wingspan,
        &mut clamped,
    )?;
    if clamped {
        warn!(
            "{user_id}/{session_id}: true attributes ({true_height:.3}, {true_wingspan:.3}) \
             outside bounds, clamped before noising"
        );
    }
    Ok(DefenseParams {
        user_id: user_id.to_owned(),
        session_id: session_id.to_owned(),
        true_height,
        true_wingspan,
        fake_height,
        fake_wingspan,
        height_gain: fake_height / true_height,
        wingspan_gain: fake_wingspan / true_wingspan,
        clamped,
    })
}

fn about(center: &Vec3, p: &Vec3, k: f64) -> Vec3 {
    [
        center[0] + k * (p[0] - center[0]),
        center[1] + k * (p[1] - center[1]),
        center[2] + k * (p[2] - center[2]),
    ]
}

/// Rewrite one frame: scale every `y` by the height gain, then scale both
/// hands about the head by the wingspan gain.
pub fn apply_defense_frame(dp: &DefenseParams, f: &Frame) -> Frame {
    let mut out = *f;
    let g = dp.height_gain;
    if g != 1.0 {
        for pose in [&mut out.head, &mut out.left, &mut out.right] {
            pose.position[1] *= g;
        }
    }
    let s = dp.wingspan_gain;
    if s != 1.0 {
        let head = out.head.position;
        out.left.position = about(&head, &out.left.position, s);
        out.right.position = about(&head, &out.right.position, s);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefendedRecording {
    pub recording: Recording,
    pub params: DefenseParams,
}

/// Estimate the true attributes from `r` itself, derive the session's
/// parameters and rewrite every frame.
pub fn defend_recording(
    r: &Recording,
    cfg: &EpsilonConfig,
    master_seed: u64,
) -> Result<DefendedRecording, PrivacyError> {
    let height = estimate_height(r)?;
    let wingspan = estimate_wingspan(r)?;
    let params = derive_defense_params(
        height,
        wingspan,
        cfg,
        master_seed,
        &r.user_id,
        &r.session_id,
    )?;
    let frames = r
        .frames
        .iter()
        .map(|f| apply_defense_frame(&params, f))
        .collect();
    Ok(DefendedRecording {
        recording: r.with_frames(frames),
        params,
    })
}

/// Mean positional displacement between matching poses of two equally long
/// recordings, meters.
pub fn mean_displacement(original: &Recording, defended: &Recording) -> f64 {
    let n = original.frames.len().min(defended.frames.len());
    if n == 0 {
        return 0.0;
    }
    let total: f64 = original
        .frames
        .iter()
        .zip(&defended.frames)
        .map(|(a, b)| {
            a.poses()
                .iter()
                .zip(b.poses())
                .map(|(p, q)| telemetry::distance(&p.position, &q.position))
                .sum::<f64>()
        })
        .sum();
    total / (3 * n) as f64
}
