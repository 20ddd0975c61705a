use std::collections::HashMap;
use std::thread;

use log::info;

use super::config::{format_eps, ExperimentConfig};
use super::report::{AuditRow, ExperimentReport, IdentificationRow, InferenceRow, UtilityRow, REPORT_SCHEMA};
use super::HarnessError;
use crate::attack::{evaluate_identification, evaluate_inference, train_model, Attribute, IdModel};
use crate::features::{estimate_height, estimate_wingspan, FeatureConfig, FeatureVector};
use crate::privacy::{audit_dp_ratio, defend_recording, mean_displacement, Bounds, DefenseParams};
use crate::synth::{generate_population, generate_session, GroundTruth, SessionSpec, UserProfile};
use crate::telemetry::Recording;

const Z95: f64 = 1.959_963_984_540_054;
pub const AUDIT_SAMPLES: usize = 200_000;
pub const AUDIT_BINS: usize = 20;

/// Wilson score interval for `k` successes out of `n` at 95% confidence.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z95 * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Map `f` over `items` on scoped threads, preserving order.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(items.len().max(1));
    let per = items.len().div_ceil(workers).max(1);
    thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(per)
            .map(|chunk| {
                let f = &f;
                s.spawn(move || chunk.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

fn generate_all(
    cfg: &ExperimentConfig,
    users: &[UserProfile],
) -> Result<Vec<Vec<Recording>>, HarnessError> {
    par_map(users, |u| {
        (1..=cfg.sessions)
            .map(|s| {
                generate_session(
                    u,
                    &SessionSpec::new(s, cfg.duration_s, cfg.rate_hz),
                    cfg.seed,
                )
            })
            .collect::<Result<Vec<_>, _>>()
    })
    .into_iter()
    .map(|r| r.map_err(HarnessError::from))
    .collect()
}

fn train(cfg: &ExperimentConfig, gallery: &[&Recording]) -> Result<IdModel, HarnessError> {
    let fc = FeatureConfig::default();
    let per_user = par_map(gallery, |r| fc.featurize(r));
    let mut feats: Vec<FeatureVector> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for (r, windows) in gallery.iter().zip(per_user) {
        for (_, f) in windows? {
            feats.push(f);
            labels.push(r.user_id.clone());
        }
    }
    Ok(train_model(&feats, &labels, cfg.model, fc)?)
}

struct Defended {
    recordings: Vec<Recording>,
    params: Vec<DefenseParams>,
    displacement: f64,
}

fn defend_all(
    cfg: &ExperimentConfig,
    test: &[&Recording],
    eps: f64,
) -> Result<Defended, HarnessError> {
    let ecfg = cfg.epsilon_config(eps)?;
    let out = par_map(test, |r| defend_recording(r, &ecfg, cfg.seed));
    let mut recordings = Vec::with_capacity(test.len());
    let mut params = Vec::with_capacity(test.len());
    let mut displacement = 0.0;
    for (r, d) in test.iter().zip(out) {
        let d = d?;
        displacement += mean_displacement(r, &d.recording);
        recordings.push(d.recording);
        params.push(d.params);
    }
    Ok(Defended {
        displacement: displacement / test.len() as f64,
        recordings,
        params,
    })
}

fn fake_errors(
    d: &Defended,
    estimate: fn(&Recording) -> Result<f64, crate::features::FeatureError>,
    fake: fn(&DefenseParams) -> f64,
) -> Result<(f64, f64), HarnessError> {
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    for (r, p) in d.recordings.iter().zip(&d.params) {
        let e = (estimate(r)? - fake(p)).abs();
        sum += e;
        max = max.max(e);
    }
    Ok((sum / d.recordings.len() as f64, max))
}

fn audit(cfg: &ExperimentConfig) -> Result<Vec<AuditRow>, HarnessError> {
    let mut jobs: Vec<(f64, Attribute, Bounds)> = Vec::new();
    for &eps in cfg.epsilons.iter().filter(|e| e.is_finite()) {
        let ecfg = cfg.epsilon_config(eps)?;
        jobs.push((eps, Attribute::Height, ecfg.bounds_height));
        jobs.push((eps, Attribute::Wingspan, ecfg.bounds_wingspan));
    }
    par_map(&jobs, |&(eps, attribute, b)| {
        let name = format!("{attribute:?}");
        let seed = crate::seed::derive(cfg.seed, &["report-audit", &name]);
        let a = audit_dp_ratio(eps, b, b.lo(), b.hi(), AUDIT_SAMPLES, AUDIT_BINS, seed)?;
        Ok(AuditRow {
            eps,
            attribute,
            samples: AUDIT_SAMPLES,
            bins: AUDIT_BINS,
            nominal_eps: a.nominal_bound,
            audited_eps: a.max_log_ratio,
            slack: a.slack,
            passes: a.passes,
        })
    })
    .into_iter()
    .collect()
}

/// Generate the population, train on session 1 and evaluate every later
/// session raw and under each budget. Fully determined by `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let users = generate_population(cfg.users, cfg.seed)?;
    let truth: HashMap<String, GroundTruth> = users
        .iter()
        .map(|u| (u.user_id.clone(), GroundTruth::from(u)))
        .collect();
    let sessions = generate_all(cfg, &users)?;
    let gallery: Vec<&Recording> = sessions.iter().map(|s| &s[0]).collect();
    let test: Vec<&Recording> = sessions.iter().flat_map(|s| &s[1..]).collect();
    info!(
        "{} users, {} gallery and {} test sessions",
        users.len(),
        gallery.len(),
        test.len()
    );
    let model = train(cfg, &gallery)?;

    let mut identification = Vec::new();
    let mut inference = Vec::new();
    let mut utility = Vec::new();
    for &eps in &cfg.epsilons {
        let d = defend_all(cfg, &test, eps)?;
        for &chunk_s in &cfg.chunks_s {
            let ev = evaluate_identification(&model, &d.recordings, chunk_s)?;
            let (ci_lo, ci_hi) = wilson_interval(ev.correct, ev.chunks);
            info!(
                "eps {} chunk {chunk_s} s: {}/{} = {:.3}",
                format_eps(eps),
                ev.correct,
                ev.chunks,
                ev.accuracy
            );
            identification.push(IdentificationRow {
                eps,
                chunk_s,
                chunks: ev.chunks,
                correct: ev.correct,
                accuracy: ev.accuracy,
                ci_lo,
                ci_hi,
            });
        }
        let inf = |a| evaluate_inference(&d.recordings, &truth, a);
        let (fake_height_mae, fake_height_max_err) =
            fake_errors(&d, estimate_height, |p| p.fake_height)?;
        let (fake_wingspan_mae, fake_wingspan_max_err) =
            fake_errors(&d, estimate_wingspan, |p| p.fake_wingspan)?;
        inference.push(InferenceRow {
            eps,
            height: inf(Attribute::Height)?,
            wingspan: inf(Attribute::Wingspan)?,
            handedness: inf(Attribute::Handedness)?,
            tempo: inf(Attribute::Tempo)?,
            fake_height_mae,
            fake_height_max_err,
            fake_wingspan_mae,
            fake_wingspan_max_err,
        });
        utility.push(UtilityRow {
            eps,
            mean_displacement_m: d.displacement,
        });
    }

    let privacy_audit = audit(cfg)?;
    Ok(ExperimentReport {
        schema: REPORT_SCHEMA.to_owned(),
        toolkit_version: crate::VERSION.to_owned(),
        config: cfg.clone(),
        population: users.len(),
        chance: 1.0 / users.len() as f64,
        identification,
        inference,
        utility,
        privacy_audit,
    })
}
