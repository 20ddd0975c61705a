use super::FeatureError;
use crate::telemetry::{Frame, Recording};

/// Minimum fill for a window to be kept, as a fraction of expected samples.
pub const MIN_FILL: f64 = 0.8;
/// Allowed deviation of a frame interval from the nominal period, relative.
const GRID_TOLERANCE: f64 = 1e-3;

/// A contiguous run of uniform-rate frames.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub start_t: f64,
    pub rate: f64,
    pub frames: &'a [Frame],
}

pub fn check_uniform_rate(frames: &[Frame], rate: f64) -> Result<(), FeatureError> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(FeatureError::NotUniformRate(rate));
    }
    let period = 1.0 / rate;
    let uniform = frames
        .windows(2)
        .all(|w| ((w[1].t - w[0].t) - period).abs() <= GRID_TOLERANCE * period);
    if uniform {
        Ok(())
    } else {
        Err(FeatureError::NotUniformRate(rate))
    }
}

/// Windows of `window_len` seconds starting every `hop` seconds from the
/// first frame. Windows with fewer than 80% of the expected samples are
/// dropped.
pub fn make_windows(
    r: &Recording,
    window_len: f64,
    hop: f64,
) -> Result<Vec<Window<'_>>, FeatureError> {
    check_uniform_rate(&r.frames, r.rate)?;
    windows_in(&r.frames, r.rate, window_len, hop)
}

/// [`make_windows`] over a frame slice already known to be on a uniform grid.
pub fn windows_in(
    frames: &[Frame],
    rate: f64,
    window_len: f64,
    hop: f64,
) -> Result<Vec<Window<'_>>, FeatureError> {
    if !(window_len > 0.0) || !(hop > 0.0) || hop > window_len {
        return Err(FeatureError::InvalidWindow {
            len: window_len,
            hop,
        });
    }
    let Some(first) = frames.first() else {
        return Ok(Vec::new());
    };
    let expected = (window_len * rate).round().max(1.0) as usize;
    let min_fill = (MIN_FILL * expected as f64 - 1e-9).ceil() as usize;
    let mut out = Vec::new();
    for k in 0.. {
        let start = ((k as f64) * hop * rate).round() as usize;
        if start >= frames.len() {
            break;
        }
        let end = (start + expected).min(frames.len());
        if end - start >= min_fill {
            out.push(Window {
                start_t: first.t + k as f64 * hop,
                rate,
                frames: &frames[start..end],
            });
        }
    }
    Ok(out)
}
