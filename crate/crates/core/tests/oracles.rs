//! Independent oracles for measured properties of the synthetic population,
//! the estimators, the classifiers and the mechanism.

use motion_privacy::attack::{
    evaluate_identification, evaluate_identification_with_truth, pearson, predict_window,
    train_model, IdModel, ModelKind, ModelParams,
};
use motion_privacy::features::{
    estimate_handedness, estimate_height, estimate_tempo, estimate_wingspan, feature_index,
    make_windows, window_features, FeatureConfig, FeatureVector,
};
use motion_privacy::privacy::{
    audit_dp_ratio, defend_recording, derive_defense_params, Bounds, EpsilonConfig,
};
use motion_privacy::synth::{generate_population, generate_session, SessionSpec, UserProfile};
use motion_privacy::telemetry::{distance, Recording};

fn sessions(users: &[UserProfile], spec: &SessionSpec, seed: u64) -> Vec<Recording> {
    users
        .iter()
        .map(|u| generate_session(u, spec, seed).unwrap())
        .collect()
}

#[test]
fn head_height_max_feature_is_the_window_maximum() {
    let users = generate_population(3, 21).unwrap();
    let rec = generate_session(&users[2], &SessionSpec::new(1, 8.0, 30.0), 21).unwrap();
    let idx = feature_index("head.py", "max").unwrap();
    for w in make_windows(&rec, 1.0, 0.5).unwrap() {
        let scan = w
            .frames
            .iter()
            .map(|f| f.head.position[1])
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(window_features(&w).unwrap().values()[idx], scan);
    }
}

#[test]
fn noise_free_estimators_recover_profiles() {
    let users = generate_population(50, 7).unwrap();
    let spec = SessionSpec::new(1, 20.0, 30.0).noise_free();
    for (u, r) in users.iter().zip(sessions(&users, &spec, 7)) {
        let h = estimate_height(&r).unwrap();
        let w = estimate_wingspan(&r).unwrap();
        assert!((h - u.height_m).abs() <= 0.02, "{}: {h} vs {}", u.user_id, u.height_m);
        assert!((w - u.wingspan_m).abs() <= 0.03, "{}: {w} vs {}", u.user_id, u.wingspan_m);
    }
}

#[test]
fn handedness_and_tempo_on_fifty_users() {
    let users = generate_population(50, 7).unwrap();
    let recs = sessions(&users, &SessionSpec::new(1, 60.0, 30.0), 7);
    let mut hand_ok = 0;
    let mut tempo_ok = 0;
    for (u, r) in users.iter().zip(&recs) {
        let h = estimate_handedness(r).unwrap();
        hand_ok += usize::from(h.right_dominant() == u.handedness.is_right());
        let t = estimate_tempo(r).unwrap();
        tempo_ok += usize::from((t.hz - u.tempo_hz).abs() <= 0.15);
    }
    println!("handedness {hand_ok}/50, tempo within 0.15 Hz {tempo_ok}/50");
    assert!(hand_ok as f64 >= 0.95 * 50.0);
    assert!(tempo_ok as f64 >= 0.90 * 50.0);
}

fn gallery(users: &[UserProfile], seed: u64) -> (Vec<FeatureVector>, Vec<String>) {
    let fc = FeatureConfig::default();
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    for r in sessions(users, &SessionSpec::new(1, 30.0, 30.0), seed) {
        for (_, f) in fc.featurize(&r).unwrap() {
            feats.push(f);
            labels.push(r.user_id.clone());
        }
    }
    (feats, labels)
}

#[test]
fn fifty_users_give_fifty_parameter_blocks() {
    let users = generate_population(50, 3).unwrap();
    let (feats, labels) = gallery(&users, 3);
    for kind in [ModelKind::NearestCentroid, ModelKind::GaussianNaiveBayes] {
        let m = train_model(&feats, &labels, kind, FeatureConfig::default()).unwrap();
        let blocks = match &m.params {
            ModelParams::NearestCentroid { centroids } => centroids.len(),
            ModelParams::GaussianNaiveBayes { means, variances } => {
                assert_eq!(means.len(), variances.len());
                means.len()
            }
        };
        assert_eq!(blocks, 50);
        assert_eq!(m.labels.len(), 50);
    }
}

#[test]
fn classifiers_agree_on_well_separated_users() {
    // keep only users at least GAP apart in height
    const GAP: f64 = 0.04;
    let mut pool = generate_population(60, 13).unwrap();
    pool.sort_by(|a, b| a.height_m.total_cmp(&b.height_m));
    let mut users: Vec<UserProfile> = Vec::new();
    for u in pool {
        if users.last().is_none_or(|p| u.height_m - p.height_m >= GAP) {
            users.push(u);
        }
    }
    assert!(users.len() >= 8, "{}", users.len());
    let (feats, labels) = gallery(&users, 13);
    let fc = FeatureConfig::default();
    let nc = train_model(&feats, &labels, ModelKind::NearestCentroid, fc).unwrap();
    let gnb = train_model(&feats, &labels, ModelKind::GaussianNaiveBayes, fc).unwrap();
    let predict = |m: &IdModel, f: &FeatureVector| predict_window(m, f).unwrap().label;

    let (mut agree, mut total, mut nc_ok, mut gnb_ok) = (0, 0, 0, 0);
    for r in sessions(&users, &SessionSpec::new(2, 30.0, 30.0), 13) {
        for (_, f) in fc.featurize(&r).unwrap() {
            let (a, b) = (predict(&nc, &f), predict(&gnb, &f));
            nc_ok += usize::from(a == r.user_id);
            gnb_ok += usize::from(b == r.user_id);
            agree += usize::from(a == b);
            total += 1;
        }
    }
    let rate = agree as f64 / total as f64;
    println!(
        "{} users: agreement {agree}/{total} = {rate:.3}, centroid {nc_ok}, gnb {gnb_ok}",
        users.len()
    );
    assert!(rate >= 0.95);
}

/// Truncated Laplace mass of `[a, b]` for center `v` and scale `s`,
/// normalized over `[lo, hi]`.
fn truncated_laplace_mass(v: f64, s: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    let cdf = |x: f64| {
        if x < v {
            0.5 * ((x - v) / s).exp()
        } else {
            1.0 - 0.5 * (-(x - v) / s).exp()
        }
    };
    (cdf(b) - cdf(a)) / (cdf(hi) - cdf(lo))
}

#[test]
fn fake_height_follows_truncated_laplace() {
    let cfg = EpsilonConfig::uniform(1.0).unwrap();
    let (lo, hi) = (cfg.bounds_height.lo(), cfg.bounds_height.hi());
    let v = 1.70;
    let scale = (hi - lo) / cfg.eps_height;
    let n = 10_000;
    let bins = 15;
    let mut hist = vec![0usize; bins];
    for i in 0..n {
        let p = derive_defense_params(v, 1.70, &cfg, 5, "u0001", &format!("s{i}")).unwrap();
        assert!((lo..=hi).contains(&p.fake_height));
        let k = ((p.fake_height - lo) / (hi - lo) * bins as f64) as usize;
        hist[k.min(bins - 1)] += 1;
    }
    let width = (hi - lo) / bins as f64;
    let mut chi2 = 0.0;
    for (k, &count) in hist.iter().enumerate() {
        let a = lo + k as f64 * width;
        let p = truncated_laplace_mass(v, scale, lo, hi, a, a + width);
        let expected = p * n as f64;
        chi2 += (count as f64 - expected).powi(2) / expected;
        // per-bin binomial check at 4.5 sigma
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (count as f64 - expected).abs() <= 4.5 * sd,
            "bin {k}: {count} vs {expected:.1}"
        );
    }
    // chi-square with 14 degrees of freedom; 36.1 is the 0.001 quantile
    assert!(chi2 < 36.1, "chi2 {chi2}");
}

#[test]
fn audit_between_nearby_heights() {
    let b = Bounds::new(1.50, 1.95).unwrap();
    let a = audit_dp_ratio(1.0, b, 1.70, 1.75, 200_000, 20, 17).unwrap();
    let bound = 0.05 / 0.45;
    assert!((a.nominal_bound - bound).abs() < 1e-12);
    assert!(a.passes, "{a:?}");
    assert!(a.max_log_ratio <= bound + 0.15);
}

#[test]
fn defended_sessions_read_as_fake_values() {
    let users = generate_population(20, 8).unwrap();
    let cfg = EpsilonConfig::uniform(0.5).unwrap();
    for r in sessions(&users, &SessionSpec::new(2, 20.0, 30.0), 8) {
        let d = defend_recording(&r, &cfg, 44).unwrap();
        let h = estimate_height(&d.recording).unwrap();
        let w = estimate_wingspan(&d.recording).unwrap();
        assert!((h - d.params.fake_height).abs() <= 0.02);
        assert!((w - d.params.fake_wingspan).abs() <= 0.02);
    }
}

fn benchmark_split(users: &[UserProfile], seed: u64) -> (Vec<Recording>, Vec<Recording>) {
    let train = sessions(users, &SessionSpec::new(1, 60.0, 30.0), seed);
    let test = sessions(users, &SessionSpec::new(2, 60.0, 30.0), seed);
    (train, test)
}

fn train_on(recs: &[Recording], kind: ModelKind) -> IdModel {
    let fc = FeatureConfig::default();
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    for r in recs {
        for (_, f) in fc.featurize(r).unwrap() {
            feats.push(f);
            labels.push(r.user_id.clone());
        }
    }
    train_model(&feats, &labels, kind, fc).unwrap()
}

#[test]
fn shuffled_truth_scores_near_chance() {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let users = generate_population(50, 7).unwrap();
    let (train, test) = benchmark_split(&users, 7);
    let model = train_on(&train, ModelKind::NearestCentroid);
    let mut truth: Vec<&str> = test.iter().map(|r| r.user_id.as_str()).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    truth.shuffle(&mut rng);
    let rep = evaluate_identification_with_truth(&model, &test, &truth, 10.0).unwrap();
    let p = rep.chance;
    let sigma = (p * (1.0 - p) / rep.chunks as f64).sqrt();
    println!(
        "shuffled: {:.4} vs chance {p:.4} (sigma {sigma:.4})",
        rep.accuracy
    );
    assert!((rep.accuracy - p).abs() <= 3.0 * sigma);
}

#[test]
fn evaluation_is_byte_deterministic() {
    let users = generate_population(10, 4).unwrap();
    let run = || {
        let (train, test) = benchmark_split(&users, 4);
        let model = train_on(&train, ModelKind::GaussianNaiveBayes);
        evaluate_identification(&model, &test, 10.0).unwrap().to_json()
    };
    assert_eq!(run(), run());
}

#[test]
fn sessions_of_one_user_get_distinct_fakes() {
    let cfg = EpsilonConfig::uniform(1.0).unwrap();
    let mut heights = Vec::new();
    let mut spans = Vec::new();
    for i in 0..100 {
        let p = derive_defense_params(1.72, 1.76, &cfg, 31, "u0005", &format!("s{i:02}")).unwrap();
        heights.push(p.fake_height);
        spans.push(p.fake_wingspan);
    }
    for xs in [&mut heights, &mut spans] {
        xs.sort_by(f64::total_cmp);
        assert!(xs.windows(2).all(|w| w[0] != w[1]));
    }
}

#[test]
fn displacement_respects_the_utility_bound() {
    let users = generate_population(10, 6).unwrap();
    let cfg = EpsilonConfig::uniform(0.5).unwrap();
    for r in sessions(&users, &SessionSpec::new(1, 10.0, 30.0), 6) {
        let d = defend_recording(&r, &cfg, 3).unwrap();
        let (g, s) = (d.params.height_gain, d.params.wingspan_gain);
        let y_max = r
            .frames
            .iter()
            .flat_map(|f| f.poses().map(|p| p.position[1]))
            .fold(0.0, f64::max);
        let span_max = r
            .frames
            .iter()
            .map(|f| distance(&f.left.position, &f.right.position))
            .fold(0.0, f64::max);
        let bound = (g - 1.0).abs() * y_max + (s - 1.0).abs() * span_max;
        for (a, b) in r.frames.iter().zip(&d.recording.frames) {
            for (pa, pb) in a.poses().iter().zip(b.poses()) {
                let moved = distance(&pa.position, &pb.position);
                assert!(moved <= bound + 1e-12, "{moved} > {bound}");
            }
        }
    }
}

#[test]
fn defense_masks_height_wingspan_correlation() {
    let users = generate_population(50, 7).unwrap();
    let recs = sessions(&users, &SessionSpec::new(2, 60.0, 30.0), 7);
    let corr = |rs: &[Recording]| {
        let h: Vec<f64> = rs.iter().map(|r| estimate_height(r).unwrap()).collect();
        let w: Vec<f64> = rs.iter().map(|r| estimate_wingspan(r).unwrap()).collect();
        pearson(&h, &w).unwrap()
    };
    let raw = corr(&recs);
    for eps in [1.0, 0.5, 0.1] {
        let cfg = EpsilonConfig::uniform(eps).unwrap();
        let defended: Vec<Recording> = recs
            .iter()
            .map(|r| defend_recording(r, &cfg, 7).unwrap().recording)
            .collect();
        let r = corr(&defended);
        println!("eps {eps}: r {r:.3} vs raw {raw:.3}");
        assert!(r < raw);
    }
}

#[test]
fn sessions_of_one_user_sit_closer_than_other_users() {
    let users = generate_population(50, 7).unwrap();
    let (train, test) = benchmark_split(&users, 7);
    let model = train_on(&train, ModelKind::NearestCentroid);
    let fc = model.features;
    let centroid = |r: &Recording| {
        let rows = fc.featurize(r).unwrap();
        let mut c = vec![0.0; rows[0].1.values().len()];
        for (_, f) in &rows {
            for (acc, z) in c.iter_mut().zip(model.standardizer.transform(f)) {
                *acc += z / rows.len() as f64;
            }
        }
        c
    };
    let c1: Vec<Vec<f64>> = train.iter().map(centroid).collect();
    let c2: Vec<Vec<f64>> = test.iter().map(centroid).collect();
    let dist = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let mut ok = 0;
    let mut pairs = 0;
    for a in 0..users.len() {
        let within = dist(&c1[a], &c2[a]);
        for b in (0..users.len()).filter(|&b| b != a) {
            ok += usize::from(within < dist(&c1[a], &c2[b]));
            pairs += 1;
        }
    }
    let share = ok as f64 / pairs as f64;
    println!("separated pairs {ok}/{pairs} = {share:.4}");
    assert!(share >= 0.90);
}
