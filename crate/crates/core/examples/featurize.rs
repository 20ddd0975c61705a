//! Sliding-window features of one session, written as CSV and read back.

use motion_privacy::features::{
    feature_index, feature_names, read_feature_csv, write_feature_csv, FeatureConfig, FEATURE_DIM,
};
use motion_privacy::synth::{generate_population, generate_session, SessionSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let user = &generate_population(2, 3)?[0];
    let rec = generate_session(user, &SessionSpec::new(1, 10.0, 30.0), 3)?;

    let fc = FeatureConfig::default();
    let rows = fc.feature_rows(&rec)?;
    println!(
        "{} windows of {} s every {} s, {FEATURE_DIM} features each",
        rows.len(),
        fc.window_s,
        fc.hop_s
    );

    let names = feature_names();
    let first = &rows[0].features;
    for name in ["head.py.max", "dist.lr.mean", "right.pitch.std"] {
        if let Some((ch, stat)) = name.rsplit_once('.') {
            if let Some(i) = feature_index(ch, stat) {
                println!("  {:<18} {:.4}", names[i], first.values()[i]);
            }
        }
    }

    let mut csv = Vec::new();
    write_feature_csv(&mut csv, &rows)?;
    let back = read_feature_csv(csv.as_slice())?;
    assert_eq!(back.len(), rows.len());
    println!("csv round trip: {} bytes, {} rows", csv.len(), back.len());
    Ok(())
}
