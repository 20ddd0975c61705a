//! Cross-session re-identification: train on each user's first session,
//! then name the user behind chunks of their second.
//!
//! ```text
//! cargo run --release --example identify [users] [chunk_s]
//! ```

use motion_privacy::attack::{evaluate_identification, train_model, ModelKind};
use motion_privacy::features::FeatureConfig;
use motion_privacy::synth::{generate_population, generate_session, SessionSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let users: usize = args.next().map_or(Ok(20), |s| s.parse())?;
    let chunk_s: f64 = args.next().map_or(Ok(10.0), |s| s.parse())?;
    let seed = 11;

    let population = generate_population(users, seed)?;
    let fc = FeatureConfig::default();
    let (mut feats, mut labels, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for u in &population {
        let train = generate_session(u, &SessionSpec::new(1, 60.0, 30.0), seed)?;
        for (_, f) in fc.featurize(&train)? {
            feats.push(f);
            labels.push(u.user_id.clone());
        }
        test.push(generate_session(u, &SessionSpec::new(2, 60.0, 30.0), seed)?);
    }

    for kind in [ModelKind::NearestCentroid, ModelKind::GaussianNaiveBayes] {
        let model = train_model(&feats, &labels, kind, fc)?;
        let rep = evaluate_identification(&model, &test, chunk_s)?;
        println!(
            "{kind:?}: {}/{} chunks of {chunk_s} s correct ({:.1}%, chance {:.1}%)",
            rep.correct,
            rep.chunks,
            100.0 * rep.accuracy,
            100.0 * rep.chance
        );
        for pair in &rep.confused_pairs {
            println!("  {} taken for {} x{}", pair.truth, pair.predicted, pair.count);
        }
    }
    Ok(())
}
