use rand::Rng;

use super::{config::check_epsilon, Bounds, PrivacyError};

/// Rejections before the bounded sampler falls back to clamping.
pub const MAX_REJECTIONS: usize = 1000;

/// Draw from Laplace(0, b) by inverting the CDF.
///
/// `u ~ Uniform(-0.5, 0.5)`, `x = -b * sgn(u) * ln(1 - 2|u|)`.
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    debug_assert!(scale > 0.0);
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        // u = -0.5 maps to an infinite draw
        if u.abs() < 0.5 {
            return -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln();
        }
    }
}

/// Laplace noise confined to `bounds` by rejection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedLaplace {
    pub bounds: Bounds,
    pub epsilon: f64,
    /// Noise scale; `bounds.width() / epsilon` for the calibrated mechanism.
    pub scale: f64,
}

impl BoundedLaplace {
    pub fn new(epsilon: f64, bounds: Bounds) -> Result<Self, PrivacyError> {
        let epsilon = check_epsilon(epsilon)?;
        Ok(Self {
            bounds,
            epsilon,
            scale: bounds.width() / epsilon,
        })
    }

    /// Same bounds and nominal epsilon with a different noise scale.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    /// Draw `v + Laplace(0, scale)` until it lands in bounds; after
    /// [`MAX_REJECTIONS`] misses, clamp the last draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, v: f64) -> Result<f64, PrivacyError> {
        if !self.bounds.contains(v) {
            return Err(PrivacyError::ValueOutOfBounds {
                value: v,
                lo: self.bounds.lo(),
                hi: self.bounds.hi(),
            });
        }
        if self.scale == 0.0 {
            return Ok(v);
        }
        let mut last = v;
        for _ in 0..=MAX_REJECTIONS {
            last = v + sample_laplace(rng, self.scale);
            if self.bounds.contains(last) {
                return Ok(last);
            }
        }
        Ok(self.bounds.clamp(last))
    }
}

pub fn sample_bounded_laplace<R: Rng + ?Sized>(
    rng: &mut R,
    v: f64,
    epsilon: f64,
    bounds: Bounds,
) -> Result<f64, PrivacyError> {
    BoundedLaplace::new(epsilon, bounds)?.sample(rng, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn height_bounds() -> Bounds {
        Bounds::new(1.50, 1.95).unwrap()
    }

    #[test]
    fn laplace_is_centered() {
        let b = 0.7;
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mean = (0..n).map(|_| sample_laplace(&mut rng, b)).sum::<f64>() / n as f64;
        assert!(
            mean.abs() <= 3.0 * b * (2.0 / n as f64).sqrt(),
            "mean {mean}"
        );
    }

    #[test]
    fn laplace_mean_absolute_deviation_is_scale() {
        // E|X| = b for Laplace(0, b)
        let b = 0.3;
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mad = (0..n)
            .map(|_| sample_laplace(&mut rng, b).abs())
            .sum::<f64>()
            / n as f64;
        assert!((mad - b).abs() <= 0.02 * b, "mad {mad}");
    }

    #[test]
    fn laplace_is_reproducible() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64)
                .map(|_| sample_laplace(&mut rng, 1.0).to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn huge_epsilon_returns_true_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let out = sample_bounded_laplace(&mut rng, 1.70, 1e9, height_bounds()).unwrap();
            assert!((out - 1.70).abs() < 1e-6);
        }
    }

    #[test]
    fn outputs_stay_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mech = BoundedLaplace::new(0.1, height_bounds()).unwrap();
        for _ in 0..100_000 {
            let out = mech.sample(&mut rng, 1.52).unwrap();
            assert!((1.50..=1.95).contains(&out));
        }
    }

    #[test]
    fn out_of_bounds_input_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(matches!(
            sample_bounded_laplace(&mut rng, 2.0, 1.0, height_bounds()),
            Err(PrivacyError::ValueOutOfBounds { .. })
        ));
    }

    #[test]
    fn clamp_fallback_after_rejections() {
        // a scale this large essentially never lands inside a 1 mm interval
        let bounds = Bounds::new(0.0, 1e-3).unwrap();
        let mech = BoundedLaplace::new(1.0, bounds).unwrap().with_scale(1e6);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let out = mech.sample(&mut rng, 5e-4).unwrap();
        assert!(out == 0.0 || out == 1e-3);
    }

    #[test]
    fn neighbouring_inputs_have_bounded_density_ratio() {
        // two 200k-sample histograms at eps = 1; ratio per qualifying bin
        // stays within e^(eps |v - v'| / width) with 15% slack
        let bounds = height_bounds();
        let mech = BoundedLaplace::new(1.0, bounds).unwrap();
        let bins = 20;
        let hist = |v: f64, seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut h = vec![0usize; bins];
            for _ in 0..200_000 {
                let x = mech.sample(&mut rng, v).unwrap();
                let k = (((x - 1.50) / 0.45) * bins as f64) as usize;
                h[k.min(bins - 1)] += 1;
            }
            h
        };
        let (a, b) = (hist(1.70, 11), hist(1.75, 12));
        let limit = (0.05f64 / 0.45).exp() * 1.15;
        for (x, y) in a.iter().zip(&b) {
            if *x >= 500 && *y >= 500 {
                let ratio = *x as f64 / *y as f64;
                assert!(ratio <= limit && 1.0 / ratio <= limit, "ratio {ratio}");
            }
        }
    }
}
