//! Draw a seeded population and one session per user, then print the ground
//! truth next to what the direct estimators read off each session.
//!
//! ```text
//! cargo run --example synth_population [users] [seed]
//! ```

use motion_privacy::features::estimate_attributes;
use motion_privacy::synth::{generate_population, generate_session, SessionSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let users: usize = args.next().map_or(Ok(8), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(7), |s| s.parse())?;

    let population = generate_population(users, seed)?;
    println!(
        "{:<6} {:>7} {:>7} {:>6} {:>6}   {:>7} {:>7} {:>6}",
        "user", "height", "span", "tempo", "hand", "est_h", "est_w", "est_t"
    );
    for u in &population {
        let rec = generate_session(u, &SessionSpec::new(1, 30.0, 30.0), seed)?;
        let est = estimate_attributes(&rec)?;
        println!(
            "{:<6} {:>7.3} {:>7.3} {:>6.2} {:>6}   {:>7.3} {:>7.3} {:>6.2}",
            u.user_id,
            u.height_m,
            u.wingspan_m,
            u.tempo_hz,
            format!("{:?}", u.handedness).to_lowercase(),
            est.height_m,
            est.wingspan_m,
            est.tempo_hz
        );
    }
    Ok(())
}
