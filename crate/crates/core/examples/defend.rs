//! Defend one session and compare what an observer measures before and
//! after.
//!
//! The fake height and wingspan are drawn once per session; every frame is
//! then rescaled so the estimators land on the fake values.
//!
//! ```text
//! cargo run --example defend [eps]
//! ```

use motion_privacy::features::{estimate_height, estimate_wingspan};
use motion_privacy::privacy::{defend_recording, mean_displacement, EpsilonConfig};
use motion_privacy::synth::{generate_population, generate_session, SessionSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eps: f64 = std::env::args().nth(1).map_or(Ok(1.0), |s| s.parse())?;
    let cfg = EpsilonConfig::uniform(eps)?;
    let master_seed = 2024;

    for u in &generate_population(5, 9)? {
        let raw = generate_session(u, &SessionSpec::new(1, 20.0, 30.0), 9)?;
        let d = defend_recording(&raw, &cfg, master_seed)?;
        let p = &d.params;
        println!(
            "{}: height {:.3} -> {:.3} (reads {:.3}), wingspan {:.3} -> {:.3} (reads {:.3}), moved {:.3} m",
            u.user_id,
            p.true_height,
            p.fake_height,
            estimate_height(&d.recording)?,
            p.true_wingspan,
            p.fake_wingspan,
            estimate_wingspan(&d.recording)?,
            mean_displacement(&raw, &d.recording)
        );
    }
    Ok(())
}
