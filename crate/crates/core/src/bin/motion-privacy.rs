//! Command-line front end. Each subcommand drives one stage of the pipeline.
//!
//! Exit status: 0 on success, 2 on a configuration or usage error, 1 on any
//! runtime failure.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;

use motion_privacy::attack::{
    evaluate_identification, evaluate_inference, train_model, Attribute, IdModel, ModelKind,
};
use motion_privacy::features::{
    estimate_attributes, read_feature_csv, write_feature_csv, FeatureConfig,
};
use motion_privacy::harness::{
    run_experiment, write_report, ExperimentConfig, ExperimentReport, HarnessError, ReportFormat,
};
use motion_privacy::privacy::{
    defend_recording, EpsilonConfig, PrivacyConfigFile, PrivacyError,
};
use motion_privacy::relay::{bench_relay, BenchConfig, Relay, RelayError, RelayOptions, Sink};
use motion_privacy::synth::{
    generate_population, generate_session, read_manifest, write_manifest, write_recording,
    GroundTruth, SessionSpec,
};
use motion_privacy::telemetry::{parse_recording, serialize_recording, Recording};

#[derive(Parser)]
#[command(name = "motion-privacy", version, about = "XR motion telemetry privacy toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic population and its sessions.
    Synth(SynthArgs),
    /// Windowed feature vectors of recordings, as CSV.
    Extract(ExtractArgs),
    /// Fit an identification model on a feature CSV.
    Train(TrainArgs),
    /// Identify the users behind recordings with a trained model.
    Identify(IdentifyArgs),
    /// Estimate height, wingspan, handedness and tempo.
    Infer(InferArgs),
    /// Apply the privacy defense to recordings.
    Defend(DefendArgs),
    /// Run the defense as a TCP relay until interrupted.
    Relay(RelayArgs),
    /// Loopback relay throughput and latency.
    Bench(BenchArgs),
    /// Run a full experiment and write its report.
    Experiment(ExperimentArgs),
    /// Print a saved report and export it as CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct FeatureArgs {
    /// Resampling rate before windowing, Hz.
    #[arg(long, default_value_t = 30.0)]
    rate: f64,
    #[arg(long, default_value_t = 1.0)]
    window: f64,
    #[arg(long, default_value_t = 0.5)]
    hop: f64,
}

impl FeatureArgs {
    fn config(&self) -> FeatureConfig {
        FeatureConfig {
            rate_hz: self.rate,
            window_s: self.window,
            hop_s: self.hop,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Experiment TOML; its population settings are used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    sessions: Option<u32>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
}

#[derive(Args)]
struct ExtractArgs {
    /// Recording files or directories of `.jsonl` files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    features: FeatureArgs,
}

#[derive(Args)]
struct TrainArgs {
    features_csv: PathBuf,
    #[arg(long, default_value = "nearest-centroid")]
    model: ModelKind,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Must match the settings the CSV was extracted with.
    #[command(flatten)]
    features: FeatureArgs,
}

#[derive(Args)]
struct IdentifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    chunk: f64,
    /// Evaluation report JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InferArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Ground-truth manifest; adds accuracy metrics per attribute.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Per-recording estimates as CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PrivacyArgs {
    /// Privacy TOML (budgets, bounds, master seed).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Budget for both attributes; `inf` disables the defense.
    #[arg(long, value_parser = parse_eps)]
    eps: Option<f64>,
    /// Master seed for the per-session draws.
    #[arg(long)]
    seed: Option<u64>,
}

impl PrivacyArgs {
    fn resolve(&self) -> Result<(EpsilonConfig, u64), Failure> {
        let (mut cfg, mut seed) = match &self.config {
            Some(path) => {
                let file = PrivacyConfigFile::load(path)?;
                (file.epsilon_config()?, file.master_seed)
            }
            None => (EpsilonConfig::default(), 0),
        };
        if let Some(eps) = self.eps {
            cfg.eps_height = eps;
            cfg.eps_wingspan = eps;
            cfg.validate()?;
        }
        if let Some(s) = self.seed {
            seed = s;
        }
        Ok((cfg, seed))
    }
}

#[derive(Args)]
struct DefendArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    privacy: PrivacyArgs,
    /// Directory for defended recordings and `params.jsonl`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RelayArgs {
    #[arg(long, default_value = "127.0.0.1:7070")]
    listen: String,
    /// Downstream `host:port`.
    #[arg(long, conflicts_with = "out", required_unless_present = "out")]
    sink: Option<String>,
    /// Recording file, or a directory for one file per session.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Estimate attributes from the first 2 s instead of trusting hello.
    #[arg(long)]
    calibrate: bool,
    #[command(flatten)]
    privacy: PrivacyArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1_000_000)]
    frames: u64,
    /// Offered load in frames per second; `inf` floods.
    #[arg(long, default_value = "inf", value_parser = parse_eps)]
    rate: f64,
    #[command(flatten)]
    privacy: PrivacyArgs,
    /// Stats JSON file; stdout only when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment TOML; the standard benchmark when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    report: PathBuf,
    /// Directory to write `report.csv` into.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_eps(s: &str) -> Result<f64, String> {
    match s {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => s.parse::<f64>().map_err(|e| e.to_string()),
    }
}

enum Failure {
    Config(String),
    Runtime(String),
}

macro_rules! runtime_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Runtime(e.to_string())
            }
        }
    )*};
}

runtime_from!(
    io::Error,
    serde_json::Error,
    motion_privacy::telemetry::TelemetryError,
    motion_privacy::features::FeatureError,
    motion_privacy::attack::AttackError,
    motion_privacy::synth::SynthError
);

fn privacy_is_config(e: &PrivacyError) -> bool {
    matches!(
        e,
        PrivacyError::Config(_) | PrivacyError::InvalidEpsilon(_) | PrivacyError::InvalidBounds(..)
    )
}

impl From<PrivacyError> for Failure {
    fn from(e: PrivacyError) -> Self {
        if privacy_is_config(&e) {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<RelayError> for Failure {
    fn from(e: RelayError) -> Self {
        match e {
            RelayError::Privacy(p) => p.into(),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

/// Expand directories into their `.jsonl` files, sorted.
fn expand(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(Failure::Config("no recordings found".into()));
    }
    Ok(out)
}

fn load_recordings(inputs: &[PathBuf]) -> Result<Vec<Recording>, Failure> {
    expand(inputs)?
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
            parse_recording(&text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))
        })
        .collect()
}

/// Write to `path`, or stdout when `None`.
fn emit(path: Option<&Path>, body: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, body)?,
        None => io::stdout().lock().write_all(body)?,
    }
    Ok(())
}

fn experiment_config(path: Option<&Path>, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn synth(a: SynthArgs) -> Result<(), Failure> {
    let mut cfg = experiment_config(a.config.as_deref(), a.seed)?;
    cfg.users = a.users.unwrap_or(cfg.users);
    cfg.sessions = a.sessions.unwrap_or(cfg.sessions);
    cfg.duration_s = a.duration.unwrap_or(cfg.duration_s);
    cfg.rate_hz = a.rate.unwrap_or(cfg.rate_hz);
    fs::create_dir_all(&a.out)?;
    let users = generate_population(cfg.users, cfg.seed)?;
    for u in &users {
        for s in 1..=cfg.sessions {
            let spec = SessionSpec::new(s, cfg.duration_s, cfg.rate_hz);
            write_recording(&a.out, &generate_session(u, &spec, cfg.seed)?)?;
        }
    }
    write_manifest(fs::File::create(a.out.join("manifest.csv"))?, &users)?;
    info!(
        "{} users x {} sessions written to {}",
        users.len(),
        cfg.sessions,
        a.out.display()
    );
    Ok(())
}

fn extract(a: ExtractArgs) -> Result<(), Failure> {
    let fc = a.features.config();
    let mut rows = Vec::new();
    for r in load_recordings(&a.inputs)? {
        rows.extend(fc.feature_rows(&r)?);
    }
    let mut buf = Vec::new();
    write_feature_csv(&mut buf, &rows)?;
    emit(a.out.as_deref(), &buf)
}

fn train(a: TrainArgs) -> Result<(), Failure> {
    let rows = read_feature_csv(fs::File::open(&a.features_csv)?)?;
    let labels: Vec<String> = rows.iter().map(|r| r.user_id.clone()).collect();
    let feats: Vec<_> = rows.into_iter().map(|r| r.features).collect();
    let model = train_model(&feats, &labels, a.model, a.features.config())?;
    info!("trained {:?} on {} labels", model.kind(), model.labels.len());
    emit(a.out.as_deref(), (model.to_json() + "\n").as_bytes())
}

fn identify(a: IdentifyArgs) -> Result<(), Failure> {
    let model = IdModel::from_json(&fs::read_to_string(&a.model)?)?;
    let test = load_recordings(&a.inputs)?;
    let rep = evaluate_identification(&model, &test, a.chunk)?;
    eprintln!(
        "{}/{} chunks correct, accuracy {:.3} (chance {:.3})",
        rep.correct, rep.chunks, rep.accuracy, rep.chance
    );
    emit(a.out.as_deref(), (rep.to_json() + "\n").as_bytes())
}

fn infer(a: InferArgs) -> Result<(), Failure> {
    let recs = load_recordings(&a.inputs)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::Runtime(e.to_string());
    w.write_record(["user_id", "session_id", "height_m", "wingspan_m", "handedness", "tempo_hz"])
        .map_err(csv_err)?;
    for r in &recs {
        let e = estimate_attributes(r)?;
        w.write_record([
            r.user_id.clone(),
            r.session_id.clone(),
            e.height_m.to_string(),
            e.wingspan_m.to_string(),
            e.handedness_score.to_string(),
            e.tempo_hz.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let buf = w.into_inner().map_err(|e| Failure::Runtime(e.to_string()))?;
    emit(a.out.as_deref(), &buf)?;

    if let Some(m) = a.manifest {
        let truth: HashMap<String, GroundTruth> = read_manifest(fs::File::open(&m)?)?
            .into_iter()
            .map(|g| (g.user_id.clone(), g))
            .collect();
        for attr in [
            Attribute::Height,
            Attribute::Wingspan,
            Attribute::Handedness,
            Attribute::Tempo,
        ] {
            let rep = evaluate_inference(&recs, &truth, attr)?;
            eprintln!("{}", serde_json::to_string(&rep)?);
        }
    }
    Ok(())
}

fn defend(a: DefendArgs) -> Result<(), Failure> {
    let (cfg, seed) = a.privacy.resolve()?;
    let recs = load_recordings(&a.inputs)?;
    fs::create_dir_all(&a.out)?;
    let mut params = String::new();
    for r in &recs {
        let d = defend_recording(r, &cfg, seed)?;
        let path = a
            .out
            .join(format!("{}_{}.jsonl", r.user_id, r.session_id));
        fs::write(path, serialize_recording(&d.recording))?;
        params.push_str(&serde_json::to_string(&d.params)?);
        params.push('\n');
    }
    fs::write(a.out.join("params.jsonl"), params)?;
    info!("defended {} recordings", recs.len());
    Ok(())
}

fn relay(a: RelayArgs) -> Result<(), Failure> {
    let (eps, master_seed) = a.privacy.resolve()?;
    let sink = match (a.sink, a.out) {
        (Some(addr), _) => Sink::Tcp(addr),
        (None, Some(path)) => Sink::from_out(&path),
        (None, None) => return Err(Failure::Config("--sink or --out is required".into())),
    };
    let relay = Relay::bind(
        &a.listen,
        sink,
        RelayOptions {
            eps,
            master_seed,
            calibrate: a.calibrate,
        },
    )?;
    let handle = relay.handle();
    ctrlc::set_handler(move || handle.shutdown())
        .map_err(|e| Failure::Runtime(format!("signal handler: {e}")))?;
    eprintln!("listening on {}", relay.local_addr());
    let stats = relay.run()?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(())
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    let (eps, seed) = a.privacy.resolve()?;
    if a.frames == 0 || !(a.rate > 0.0) {
        return Err(Failure::Config("--frames and --rate must be positive".into()));
    }
    let stats = bench_relay(&BenchConfig {
        n_frames: a.frames,
        rate: a.rate,
        eps,
        seed,
    })?;
    let body = serde_json::to_string_pretty(&stats)? + "\n";
    print!("{body}");
    if let Some(p) = a.out {
        fs::write(p, body)?;
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<(), Failure> {
    let cfg = experiment_config(a.config.as_deref(), a.seed)?;
    let started = Instant::now();
    let rep = run_experiment(&cfg)?;
    let json = write_report(&rep, ReportFormat::Json, &a.out)?;
    write_report(&rep, ReportFormat::Csv, &a.out)?;
    print!("{}", rep.summary());
    eprintln!(
        "wrote {} in {:.1} s",
        json.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn report(a: ReportArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.report)?;
    let rep = ExperimentReport::from_json(&text)?;
    print!("{}", rep.summary());
    if let Some(dir) = a.out {
        let p = write_report(&rep, ReportFormat::Csv, &dir)?;
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.cmd {
        Cmd::Synth(a) => synth(a),
        Cmd::Extract(a) => extract(a),
        Cmd::Train(a) => train(a),
        Cmd::Identify(a) => identify(a),
        Cmd::Infer(a) => infer(a),
        Cmd::Defend(a) => defend(a),
        Cmd::Relay(a) => relay(a),
        Cmd::Bench(a) => bench(a),
        Cmd::Experiment(a) => experiment(a),
        Cmd::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
