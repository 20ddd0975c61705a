//! Loopback relay benchmark: flood throughput, then latency under a paced
//! 144 Hz stream.

use motion_privacy::relay::{bench_relay, BenchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let flood = bench_relay(&BenchConfig::new(500_000, f64::INFINITY))?;
    println!(
        "flood: {} frames in {:.2} s = {:.0} frames/s",
        flood.frames_relayed, flood.elapsed_s, flood.frames_per_sec
    );

    let paced = bench_relay(&BenchConfig::new(1_440, 144.0))?;
    println!(
        "144 Hz: p50 {:.1} us, p99 {:.1} us, max {:.1} us",
        paced.latency_p50_us, paced.latency_p99_us, paced.latency_max_us
    );
    Ok(())
}
