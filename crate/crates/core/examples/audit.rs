//! Empirical privacy audit of the bounded Laplace mechanism, plus a broken
//! mechanism with half the noise that the audit should catch.

use motion_privacy::privacy::{audit_dp_ratio, audit_mechanism, Bounds, BoundedLaplace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bounds = Bounds::new(1.50, 1.95)?;
    let (n, bins, seed) = (200_000, 20, 1);

    for eps in [0.5, 1.0, 2.0] {
        let a = audit_dp_ratio(eps, bounds, bounds.lo(), bounds.hi(), n, bins, seed)?;
        println!(
            "eps {eps}: worst log ratio {:.3} vs bound {:.3} + {} over {} bins -> {}",
            a.max_log_ratio,
            a.nominal_bound,
            a.slack,
            a.qualifying_bins,
            if a.passes { "pass" } else { "FAIL" }
        );
    }

    let eps = 1.0;
    let weak = BoundedLaplace::new(eps, bounds)?.with_scale(bounds.width() / eps / 2.0);
    let a = audit_mechanism(
        |rng, v| weak.sample(rng, v),
        eps,
        bounds,
        bounds.lo(),
        bounds.hi(),
        n,
        bins,
        seed,
    )?;
    println!(
        "half noise: worst log ratio {:.3} -> {}",
        a.max_log_ratio,
        if a.passes { "pass" } else { "caught" }
    );
    Ok(())
}
