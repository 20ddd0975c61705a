//! Run the standard benchmark and print the accuracy, inference and audit
//! tables.
//!
//! ```text
//! cargo run --release --example benchmark [seed]
//! ```

use motion_privacy::harness::{run_experiment, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::default();
    if let Some(seed) = std::env::args().nth(1) {
        cfg.seed = seed.parse()?;
    }
    let started = std::time::Instant::now();
    let rep = run_experiment(&cfg)?;
    print!("{}", rep.summary());
    eprintln!("runtime {:.1} s", started.elapsed().as_secs_f64());
    Ok(())
}
