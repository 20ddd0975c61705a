//! Attribute inference over a population: how well height, wingspan,
//! handedness and tempo can be read from raw motion.

use std::collections::HashMap;

use motion_privacy::attack::{evaluate_inference, Attribute};
use motion_privacy::synth::{generate_population, generate_session, GroundTruth, SessionSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let population = generate_population(30, 5)?;
    let truth: HashMap<String, GroundTruth> = population
        .iter()
        .map(|u| (u.user_id.clone(), GroundTruth::from(u)))
        .collect();
    let sessions = population
        .iter()
        .map(|u| generate_session(u, &SessionSpec::new(1, 30.0, 30.0), 5))
        .collect::<Result<Vec<_>, _>>()?;

    for attr in [
        Attribute::Height,
        Attribute::Wingspan,
        Attribute::Handedness,
        Attribute::Tempo,
    ] {
        let r = evaluate_inference(&sessions, &truth, attr)?;
        match (r.mae, r.accuracy) {
            (Some(mae), _) => println!("{attr:?}: MAE {mae:.4}, r {:.4}", r.pearson_r),
            (_, Some(acc)) => println!("{attr:?}: accuracy {acc:.3}"),
            _ => println!("{attr:?}: degenerate"),
        }
    }
    Ok(())
}
