//! Recording format basics: serialize, parse back, validate and resample.

use motion_privacy::synth::{generate_population, generate_session, SessionSpec};
use motion_privacy::telemetry::{
    parse_recording, resample, serialize_recording, validate_recording,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let user = &generate_population(2, 1)?[0];
    let rec = generate_session(user, &SessionSpec::new(1, 5.0, 72.0), 1)?;

    let text = serialize_recording(&rec);
    for line in text.lines().take(2) {
        println!("{line}");
    }
    println!("... {} lines, {} bytes", text.lines().count(), text.len());

    let back = parse_recording(&text)?;
    // numbers are written at 9 significant digits, so a second pass is exact
    assert_eq!(serialize_recording(&back), text);
    println!("valid: {}", validate_recording(&back).is_valid());

    let slow = resample(&back, 30.0)?;
    println!(
        "resampled 72 Hz -> 30 Hz: {} -> {} frames, {:.3} s",
        back.frames.len(),
        slow.frames.len(),
        slow.duration()
    );
    Ok(())
}
