//! Empirical audit of the bounded mechanism's privacy loss.
//!
//! Two histograms of mechanism outputs are built, one per input value. For
//! every bin with enough hits in both, the log ratio of the hit counts
//! estimates the privacy loss at that output. A calibrated mechanism keeps
//! the worst bin under `eps * |v - v'| / width` plus a fixed slack covering
//! sampling noise and the extra loss from truncation.

use serde::Serialize;

use super::{BoundedLaplace, Bounds, PrivacyError};
use crate::seed;

pub const MIN_AUDIT_SAMPLES: usize = 100_000;
/// Minimum hits in both histograms for a bin to count.
pub const MIN_BIN_HITS: usize = 500;
/// Allowance on top of the nominal bound.
pub const AUDIT_SLACK: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditResult {
    pub max_log_ratio: f64,
    /// `eps * |v - v'| / width`.
    pub nominal_bound: f64,
    pub slack: f64,
    pub qualifying_bins: usize,
    pub passes: bool,
}

fn histogram<F>(
    mut draw: F,
    bounds: Bounds,
    n: usize,
    bins: usize,
) -> Result<Vec<usize>, PrivacyError>
where
    F: FnMut() -> Result<f64, PrivacyError>,
{
    let mut h = vec![0usize; bins];
    for _ in 0..n {
        let x = draw()?;
        let k = ((x - bounds.lo()) / bounds.width() * bins as f64).floor();
        h[(k.max(0.0) as usize).min(bins - 1)] += 1;
    }
    Ok(h)
}

/// Audit an arbitrary bounded mechanism. `mechanism` receives a generator
/// and the input value and returns one output.
#[allow(clippy::too_many_arguments)]
pub fn audit_mechanism<F>(
    mut mechanism: F,
    nominal_epsilon: f64,
    bounds: Bounds,
    v: f64,
    v_adjacent: f64,
    n_samples: usize,
    n_bins: usize,
    seed: u64,
) -> Result<AuditResult, PrivacyError>
where
    F: FnMut(&mut dyn rand::RngCore, f64) -> Result<f64, PrivacyError>,
{
    if n_samples < MIN_AUDIT_SAMPLES {
        return Err(PrivacyError::InsufficientSamples {
            needed: MIN_AUDIT_SAMPLES,
            got: n_samples,
        });
    }
    for value in [v, v_adjacent] {
        if !bounds.contains(value) {
            return Err(PrivacyError::ValueOutOfBounds {
                value,
                lo: bounds.lo(),
                hi: bounds.hi(),
            });
        }
    }
    let bins = n_bins.max(1);
    let mut rng_a = seed::rng(seed, &["audit", "a"]);
    let mut rng_b = seed::rng(seed, &["audit", "b"]);
    let a = histogram(|| mechanism(&mut rng_a, v), bounds, n_samples, bins)?;
    let b = histogram(
        || mechanism(&mut rng_b, v_adjacent),
        bounds,
        n_samples,
        bins,
    )?;

    let mut max_log_ratio: f64 = 0.0;
    let mut qualifying = 0;
    for (x, y) in a.iter().zip(&b) {
        if *x >= MIN_BIN_HITS && *y >= MIN_BIN_HITS {
            qualifying += 1;
            max_log_ratio = max_log_ratio.max((*x as f64 / *y as f64).ln().abs());
        }
    }
    let nominal_bound = nominal_epsilon * (v - v_adjacent).abs() / bounds.width();
    Ok(AuditResult {
        max_log_ratio,
        nominal_bound,
        slack: AUDIT_SLACK,
        qualifying_bins: qualifying,
        passes: qualifying > 0 && max_log_ratio <= nominal_bound + AUDIT_SLACK,
    })
}

/// Audit the calibrated bounded Laplace mechanism at `eps`.
pub fn audit_dp_ratio(
    eps: f64,
    bounds: Bounds,
    v: f64,
    v_adjacent: f64,
    n_samples: usize,
    n_bins: usize,
    seed: u64,
) -> Result<AuditResult, PrivacyError> {
    let mech = BoundedLaplace::new(eps, bounds)?;
    audit_mechanism(
        |rng, value| mech.sample(rng, value),
        eps,
        bounds,
        v,
        v_adjacent,
        n_samples,
        n_bins,
        seed,
    )
}
