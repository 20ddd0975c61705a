//! Acceptance checks for the toolkit as a whole. Runs sequentially so the
//! timing criteria are not measured under contention; prints one line per
//! criterion and exits nonzero if any fails.

use std::io::Write;
use std::net::TcpStream;
use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::thread;
use std::time::{Duration, Instant};

use motion_privacy::features::{estimate_height, estimate_wingspan};
use motion_privacy::harness::{run_experiment, ExperimentConfig, ExperimentReport};
use motion_privacy::privacy::{
    apply_defense_frame, audit_dp_ratio, audit_mechanism, BoundedLaplace, Bounds, DefenseParams,
    EpsilonConfig,
};
use motion_privacy::relay::{bench_relay, BenchConfig, Relay, RelayOptions, Sink};
use motion_privacy::synth::{generate_population, generate_session, SessionSpec};
use motion_privacy::telemetry::{parse_recording, serialize_recording, Recording};

const INF: f64 = f64::INFINITY;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn accuracy(rep: &ExperimentReport, eps: f64, chunk: f64) -> f64 {
    rep.identification_at(eps, chunk).unwrap().accuracy
}

fn identification_analog() -> Outcome {
    let t = Instant::now();
    let rep = run_experiment(&ExperimentConfig::default()).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let acc = accuracy(&rep, INF, 60.0);
    ensure(
        acc >= 0.90 && secs <= 120.0,
        format!("60 s accuracy {acc:.3} (>= 0.90), runtime {secs:.1} s (<= 120)"),
    )
}

fn observation_length() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for seed in 7..12 {
        let cfg = ExperimentConfig {
            seed,
            epsilons: vec![INF],
            ..ExperimentConfig::default()
        };
        let rep = run_experiment(&cfg).map_err(|e| e.to_string())?;
        let (short, long) = (accuracy(&rep, INF, 10.0), accuracy(&rep, INF, 60.0));
        ok &= short <= long;
        parts.push(format!("seed {seed}: {short:.3} <= {long:.3}"));
    }
    ensure(ok, parts.join(", "))
}

fn defended_benchmark() -> ExperimentReport {
    let cfg = ExperimentConfig {
        epsilons: vec![INF, 5.0, 1.0, 0.5, 0.1],
        ..ExperimentConfig::default()
    };
    run_experiment(&cfg).unwrap()
}

fn defense_efficacy(rep: &ExperimentReport) -> Outcome {
    let half = accuracy(rep, 0.5, 60.0);
    let mut ok = (0.02..=0.25).contains(&half);
    let mut trail = Vec::new();
    for chunk in [10.0, 60.0] {
        let accs: Vec<f64> = [INF, 5.0, 1.0, 0.1]
            .iter()
            .map(|&e| accuracy(rep, e, chunk))
            .collect();
        ok &= accs.windows(2).all(|w| w[1] <= w[0] + 0.02);
        trail.push(format!(
            "{chunk} s: {}",
            accs.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>().join(" > ")
        ));
    }
    ensure(
        ok,
        format!("eps 0.5 accuracy {half:.3} in [0.02, 0.25]; {}", trail.join("; ")),
    )
}

fn inference_protection(rep: &ExperimentReport) -> Outcome {
    let raw = rep.inference_at(INF).unwrap();
    let def = rep.inference_at(0.1).unwrap();
    let raw_r = raw.height.pearson_r;
    let raw_mae = raw.height.mae.unwrap_or(f64::NAN);
    let def_r = def.height.pearson_r;
    let fake = def.fake_height_max_err;
    ensure(
        raw_r >= 0.99 && raw_mae <= 0.02 && def_r.abs() <= 0.3 && fake <= 0.02,
        format!(
            "raw r {raw_r:.4} mae {raw_mae:.4} m; eps 0.1 r {def_r:.3}, worst distance to fake {fake:.2e} m"
        ),
    )
}

fn dp_audit() -> Outcome {
    let t = Instant::now();
    let b = Bounds::new(1.50, 1.95).map_err(|e| e.to_string())?;
    let (n, bins, seed) = (200_000, 20, 11);
    let real = audit_dp_ratio(1.0, b, b.lo(), b.hi(), n, bins, seed).map_err(|e| e.to_string())?;
    let weak = BoundedLaplace::new(1.0, b)
        .map_err(|e| e.to_string())?
        .with_scale(b.width() / 2.0);
    let control = audit_mechanism(|rng, v| weak.sample(rng, v), 1.0, b, b.lo(), b.hi(), n, bins, seed)
        .map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    ensure(
        real.passes && !control.passes && secs <= 30.0,
        format!(
            "eps 1 log ratio {:.3} (<= {:.2}), half-noise control {:.3} rejected: {}, {secs:.1} s",
            real.max_log_ratio,
            real.nominal_bound + real.slack,
            control.max_log_ratio,
            !control.passes
        ),
    )
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

fn scaled(r: &Recording, g: f64, s: f64) -> Recording {
    let p = DefenseParams {
        user_id: r.user_id.clone(),
        session_id: r.session_id.clone(),
        true_height: 1.0,
        true_wingspan: 1.0,
        fake_height: g,
        fake_wingspan: s,
        height_gain: g,
        wingspan_gain: s,
        clamped: false,
    };
    r.with_frames(r.frames.iter().map(|f| apply_defense_frame(&p, f)).collect())
}

fn relay_identity(r: &Recording) -> Result<bool, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("relayed.jsonl");
    let opts = RelayOptions {
        eps: EpsilonConfig::disabled(),
        master_seed: 3,
        calibrate: false,
    };
    let relay = Relay::bind("127.0.0.1:0", Sink::File(out.clone()), opts).map_err(|e| e.to_string())?;
    let addr = relay.local_addr();
    let handle = relay.handle();
    let worker = thread::spawn(move || relay.run());

    let text = serialize_recording(r);
    let mut body = format!(
        "{{\"kind\":\"hello\",\"user\":\"{}\",\"session\":\"{}\",\"rate\":{},\"declared_height\":1.7,\"declared_wingspan\":1.7}}\n",
        r.user_id, r.session_id, r.rate
    );
    for line in text.lines().skip(1) {
        body.push_str(line);
        body.push('\n');
    }
    body.push_str(&format!("{{\"kind\":\"bye\",\"frames\":{}}}\n", r.frames.len()));
    TcpStream::connect(addr)
        .and_then(|mut c| c.write_all(body.as_bytes()))
        .map_err(|e| e.to_string())?;

    let deadline = Instant::now() + Duration::from_secs(20);
    let mut got = String::new();
    while Instant::now() < deadline {
        got = std::fs::read_to_string(&out).unwrap_or_default();
        if got.lines().count() > r.frames.len() {
            break;
        }
        thread::sleep(Duration::from_millis(10));
    }
    handle.shutdown();
    worker.join().map_err(|_| "relay panicked")?.map_err(|e| e.to_string())?;
    Ok(got == text)
}

fn equivariance() -> Outcome {
    let users = generate_population(8, 21).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut ok = true;
    for (i, u) in users.iter().enumerate() {
        let r = generate_session(u, &SessionSpec::new(1, 10.0, 30.0), 21).map_err(|e| e.to_string())?;
        let g = 0.85 + 0.05 * i as f64;
        let s = 1.2 - 0.05 * i as f64;
        let h0 = estimate_height(&r).map_err(|e| e.to_string())?;
        let stepped = scaled(&r, g, 1.0);
        let both = scaled(&r, g, s);
        let h = estimate_height(&both).map_err(|e| e.to_string())?;
        let w0 = estimate_wingspan(&stepped).map_err(|e| e.to_string())?;
        let w = estimate_wingspan(&both).map_err(|e| e.to_string())?;
        ok &= close(h, g * h0) && close(w, s * w0);
        worst = worst.max(((h - g * h0) / h).abs()).max(((w - s * w0) / w).abs());
    }
    let users = generate_population(2, 22).map_err(|e| e.to_string())?;
    let r = generate_session(&users[1], &SessionSpec::new(2, 5.0, 144.0), 22)
        .map_err(|e| e.to_string())?;
    let identical = relay_identity(&r)?;
    ensure(
        ok && identical,
        format!("worst relative scaling error {worst:.1e} (<= 1e-9); relay at eps inf byte-identical: {identical}"),
    )
}

fn relay_performance() -> Outcome {
    let flood = bench_relay(&BenchConfig::new(500_000, INF)).map_err(|e| e.to_string())?;
    let paced = bench_relay(&BenchConfig::new(2_880, 144.0)).map_err(|e| e.to_string())?;
    ensure(
        flood.frames_per_sec >= 50_000.0 && paced.latency_p99_us <= 1000.0,
        format!(
            "flood {:.0} frames/s (>= 50000), 144 Hz p99 {:.1} us (<= 1000)",
            flood.frames_per_sec, paced.latency_p99_us
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_motion-privacy"))
            .args(["experiment", "--seed", "7", "--out"])
            .arg(&out)
            .env("RUST_LOG", "warn")
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        reports.push((
            std::fs::read(out.join("report.json")).map_err(|e| e.to_string())?,
            std::fs::read(out.join("report.csv")).map_err(|e| e.to_string())?,
        ));
    }
    let same_report = reports[0] == reports[1];

    let users = generate_population(200, 8).map_err(|e| e.to_string())?;
    let mut lossless = 0;
    for (i, u) in users.iter().enumerate() {
        for s in 1..=5 {
            let rate = [30.0, 60.0, 72.0, 90.0, 144.0][(i + s as usize) % 5];
            let r = generate_session(u, &SessionSpec::new(s, 2.0, rate), 8).map_err(|e| e.to_string())?;
            let text = serialize_recording(&r);
            let back = parse_recording(&text).map_err(|e| e.to_string())?;
            if back == r && serialize_recording(&back) == text {
                lossless += 1;
            }
        }
    }
    ensure(
        same_report && lossless == 1000,
        format!("two CLI runs byte-identical: {same_report}; {lossless}/1000 recordings round-trip exactly"),
    )
}

fn main() -> ExitCode {
    // a failing check reports through its line, not a backtrace
    panic::set_hook(Box::new(|_| {}));
    let guarded = |f: &dyn Fn() -> Outcome| {
        panic::catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            })
    };

    let defended = panic::catch_unwind(defended_benchmark).ok();
    let with_defended = |check: fn(&ExperimentReport) -> Outcome| -> Outcome {
        match &defended {
            Some(rep) => check(rep),
            None => Err("defended benchmark failed to run".into()),
        }
    };

    let checks: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("identification analog", Box::new(identification_analog)),
        ("observation length", Box::new(observation_length)),
        ("defense efficacy", Box::new(|| with_defended(defense_efficacy))),
        ("inference protection", Box::new(|| with_defended(inference_protection))),
        ("privacy audit", Box::new(dp_audit)),
        ("exact equivariance", Box::new(equivariance)),
        ("relay performance", Box::new(relay_performance)),
        ("determinism", Box::new(determinism)),
    ];

    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let (tag, detail) = match guarded(check.as_ref()) {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} {tag} {name}: {detail}", i + 1);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
