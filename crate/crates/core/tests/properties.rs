use proptest::collection::vec;
use proptest::prelude::*;

use motion_privacy::attack::{predict_window, train_model, ModelKind};
use motion_privacy::features::{
    estimate_height, estimate_wingspan, summarize_channel, FeatureConfig, FeatureVector,
    FEATURE_DIM,
};
use motion_privacy::privacy::{
    apply_defense_frame, derive_defense_params, BoundedLaplace, Bounds, DefenseParams,
    EpsilonConfig,
};
use motion_privacy::relay::{decode_message, encode_message, WireMessage};
use motion_privacy::synth::{generate_population, generate_session, SessionSpec};
use motion_privacy::telemetry::{
    euler_from_quat, parse_recording, quat_from_euler, resample, serialize_recording,
    validate_recording, Frame, Pose, Quat, Recording,
};
use rand::SeedableRng;

fn unit_quat() -> impl Strategy<Value = Quat> {
    (
        -1.0f64..1.0,
        -1.0f64..1.0,
        -1.0f64..1.0,
        -1.0f64..1.0,
    )
        .prop_filter("non-degenerate", |(w, x, y, z)| {
            w * w + x * x + y * y + z * z > 1e-3
        })
        .prop_map(|(w, x, y, z)| Quat::new(w, x, y, z).normalized())
}

fn pose() -> impl Strategy<Value = Pose> {
    ([-5.0f64..5.0, 0.0f64..3.0, -5.0f64..5.0], unit_quat())
        .prop_map(|(p, q)| Pose::new(p, q))
}

/// Recording with strictly increasing timestamps.
fn recording() -> impl Strategy<Value = Recording> {
    (
        1.0f64..500.0,
        vec((0.001f64..0.2, pose(), pose(), pose()), 2..60),
    )
        .prop_map(|(rate, steps)| {
            let mut t = 0.0;
            let frames = steps
                .into_iter()
                .map(|(dt, head, left, right)| {
                    t += dt;
                    Frame {
                        t,
                        head,
                        left,
                        right,
                    }
                })
                .collect();
            Recording::new("u0042", "s07", rate, frames)
        })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

fn synth_session(user: usize, seed: u64, seconds: f64) -> Recording {
    let users = generate_population(user + 2, seed).unwrap();
    generate_session(&users[user], &SessionSpec::new(1, seconds, 30.0), seed).unwrap()
}

fn params(g: f64, s: f64) -> DefenseParams {
    DefenseParams {
        user_id: "u".into(),
        session_id: "s".into(),
        true_height: 1.7,
        true_wingspan: 1.7,
        fake_height: 1.7 * g,
        fake_wingspan: 1.7 * s,
        height_gain: g,
        wingspan_gain: s,
        clamped: false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialize_parse_is_a_fixpoint(r in recording()) {
        let text = serialize_recording(&r);
        let once = parse_recording(&text).unwrap();
        prop_assert_eq!(once.frames.len(), r.frames.len());
        // arbitrary doubles are quantized to 9 significant digits once
        for (a, b) in once.frames.iter().zip(&r.frames) {
            prop_assert!(close(a.t, b.t, 5e-9), "{} vs {}", a.t, b.t);
            for (pa, pb) in a.poses().iter().zip(b.poses()) {
                for k in 0..3 {
                    prop_assert!(close(pa.position[k], pb.position[k], 5e-9));
                }
            }
        }
        // after which the form is canonical and the round trip exact
        let twice = parse_recording(&serialize_recording(&once)).unwrap();
        prop_assert_eq!(&twice, &once);
        prop_assert_eq!(serialize_recording(&twice), serialize_recording(&once));
    }

    #[test]
    fn wire_frames_round_trip(r in recording()) {
        let canonical = parse_recording(&serialize_recording(&r)).unwrap();
        for f in &canonical.frames {
            let bytes = encode_message(&WireMessage::Frame(*f));
            prop_assert_eq!(decode_message(&bytes).unwrap(), WireMessage::Frame(*f));
        }
    }

    #[test]
    fn resample_grid_is_increasing(r in recording(), target in 1.0f64..200.0) {
        let out = resample(&r, target).unwrap();
        prop_assert_eq!(out.frames[0].t, r.frames[0].t);
        for w in out.frames.windows(2) {
            prop_assert!(w[1].t > w[0].t);
        }
        prop_assert!(out.frames.last().unwrap().t <= r.frames.last().unwrap().t + 1e-9);
    }

    #[test]
    fn slerp_is_unit(a in unit_quat(), b in unit_quat(), t in 0.0f64..=1.0) {
        prop_assert!((a.slerp(b, t).norm() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn euler_recomposes(yaw in -3.1f64..3.1, pitch in -1.5f64..1.5, roll in -3.1f64..3.1) {
        let q = quat_from_euler(yaw, pitch, roll);
        let e = euler_from_quat(q).unwrap();
        let back = quat_from_euler(e.yaw, e.pitch, e.roll);
        let d = (back.dot(q).abs() - 1.0).abs();
        prop_assert!(d <= 1e-6, "{:?} -> {:?}", (yaw, pitch, roll), e);
    }

    #[test]
    fn summary_is_ordered(xs in vec(-1e3f64..1e3, 1..200)) {
        let s = summarize_channel(&xs).unwrap();
        prop_assert!(s.min <= s.median && s.median <= s.max);
        prop_assert!(s.min <= s.mean && s.mean <= s.max);
        prop_assert!(s.std >= 0.0);
        let constant = xs.iter().all(|x| *x == xs[0]);
        prop_assert_eq!(s.std == 0.0, constant);
    }

    #[test]
    fn constant_channels_have_zero_std(x in -1e3f64..1e3, n in 1usize..100) {
        prop_assert_eq!(summarize_channel(&vec![x; n]).unwrap().std, 0.0);
    }

    #[test]
    fn fake_values_stay_in_bounds(
        v in 1.50f64..=1.95,
        eps in 0.01f64..20.0,
        seed in any::<u64>(),
    ) {
        let b = Bounds::new(1.50, 1.95).unwrap();
        let mech = BoundedLaplace::new(eps, b).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let x = mech.sample(&mut rng, v).unwrap();
            prop_assert!(b.contains(x));
        }
        let cfg = EpsilonConfig::uniform(eps).unwrap();
        let p = derive_defense_params(v, v, &cfg, seed, "u", "s").unwrap();
        prop_assert!(cfg.bounds_height.contains(p.fake_height));
        prop_assert!(cfg.bounds_wingspan.contains(p.fake_wingspan));
    }

    #[test]
    fn params_are_a_pure_function_of_identity(seed in any::<u64>(), user in "[a-z0-9]{1,8}") {
        let cfg = EpsilonConfig::uniform(1.0).unwrap();
        let a = derive_defense_params(1.7, 1.75, &cfg, seed, &user, "s01").unwrap();
        let b = derive_defense_params(1.7, 1.75, &cfg, seed, &user, "s01").unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn infinite_budget_is_the_identity(r in recording()) {
        let p = derive_defense_params(1.7, 1.75, &EpsilonConfig::disabled(), 1, "u", "s").unwrap();
        prop_assert!(p.is_identity());
        for f in &r.frames {
            prop_assert_eq!(apply_defense_frame(&p, f), *f);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn height_estimate_scales_with_gain(
        user in 0usize..6,
        seed in 0u64..1000,
        g in 0.7f64..1.4,
    ) {
        let r = synth_session(user, seed, 3.0);
        let p = params(g, 1.0);
        let d = r.with_frames(r.frames.iter().map(|f| apply_defense_frame(&p, f)).collect());
        let (raw, def) = (estimate_height(&r).unwrap(), estimate_height(&d).unwrap());
        prop_assert!(close(def, g * raw, 1e-9), "{} vs {}", def, g * raw);
    }

    /// Wingspan scales by `s` relative to the height-scaled recording, since
    /// the vertical scaling also moves the hands.
    #[test]
    fn wingspan_estimate_scales_with_gain(
        user in 0usize..6,
        seed in 0u64..1000,
        g in 0.8f64..1.25,
        s in 0.7f64..1.4,
    ) {
        let r = synth_session(user, seed, 3.0);
        let stepped = r.with_frames(
            r.frames.iter().map(|f| apply_defense_frame(&params(g, 1.0), f)).collect(),
        );
        let d = r.with_frames(
            r.frames.iter().map(|f| apply_defense_frame(&params(g, s), f)).collect(),
        );
        let (base, def) = (estimate_wingspan(&stepped).unwrap(), estimate_wingspan(&d).unwrap());
        prop_assert!(close(def, s * base, 1e-9), "{} vs {}", def, s * base);
        let h = estimate_height(&d).unwrap();
        prop_assert!(close(h, g * estimate_height(&r).unwrap(), 1e-9));
    }

    #[test]
    fn generated_sessions_validate(user in 0usize..10, seed in any::<u64>(), rate in 10.0f64..144.0) {
        let users = generate_population(10, seed).unwrap();
        let r = generate_session(&users[user], &SessionSpec::new(2, 3.0, rate), seed).unwrap();
        let report = validate_recording(&r);
        prop_assert!(report.is_valid(), "{:?}", report.violations);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// A strictly increasing map of all scores keeps the argmax, so the
    /// label must be the argmax of any such map.
    #[test]
    fn predicted_label_is_score_argmax(
        probe in vec(-3.0f64..3.0, FEATURE_DIM),
        kind in prop_oneof![Just(ModelKind::NearestCentroid), Just(ModelKind::GaussianNaiveBayes)],
    ) {
        let fc = FeatureConfig::default();
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        for (k, label) in ["a", "b", "c"].iter().enumerate() {
            for j in 0..6 {
                let row: Vec<f64> = (0..FEATURE_DIM)
                    .map(|d| k as f64 + 0.1 * ((d * 7 + j * 3) % 5) as f64)
                    .collect();
                feats.push(FeatureVector::try_from(row).unwrap());
                labels.push(label.to_string());
            }
        }
        let m = train_model(&feats, &labels, kind, fc).unwrap();
        let p = predict_window(&m, &FeatureVector::try_from(probe).unwrap()).unwrap();
        let argmax = |xs: &[f64]| {
            let mut best = 0;
            for i in 1..xs.len() {
                if xs[i] > xs[best] {
                    best = i;
                }
            }
            best
        };
        let raw = argmax(&p.scores);
        prop_assert_eq!(&m.labels[raw], &p.label);
        let lifted: Vec<f64> = p.scores.iter().map(|s| 3.0 * s + 7.0).collect();
        let cubed: Vec<f64> = p.scores.iter().map(|s| s.powi(3)).collect();
        prop_assert_eq!(argmax(&lifted), raw);
        prop_assert_eq!(argmax(&cubed), raw);
    }
}
