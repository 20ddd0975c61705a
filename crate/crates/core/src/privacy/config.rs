use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PrivacyError, DEFAULT_HEIGHT_BOUNDS, DEFAULT_WINGSPAN_BOUNDS};

/// Closed interval `[lo, hi]` with `hi > lo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Bounds {
    lo: f64,
    hi: f64,
}

impl Bounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self, PrivacyError> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(PrivacyError::InvalidBounds(lo, hi));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Sensitivity of a value confined to these bounds.
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }
}

impl TryFrom<[f64; 2]> for Bounds {
    type Error = PrivacyError;

    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        Bounds::new(v[0], v[1])
    }
}

impl From<Bounds> for [f64; 2] {
    fn from(b: Bounds) -> Self {
        [b.lo, b.hi]
    }
}

/// Privacy budget per protected attribute. `f64::INFINITY` disables noise
/// for that attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonConfig {
    pub eps_height: f64,
    pub eps_wingspan: f64,
    pub bounds_height: Bounds,
    pub bounds_wingspan: Bounds,
}

pub(crate) fn check_epsilon(eps: f64) -> Result<f64, PrivacyError> {
    if eps > 0.0 && !eps.is_nan() {
        Ok(eps)
    } else {
        Err(PrivacyError::InvalidEpsilon(eps))
    }
}

impl EpsilonConfig {
    /// Same budget on both attributes, default population bounds.
    pub fn uniform(eps: f64) -> Result<Self, PrivacyError> {
        Self::new(eps, eps)
    }

    pub fn new(eps_height: f64, eps_wingspan: f64) -> Result<Self, PrivacyError> {
        Ok(Self {
            eps_height: check_epsilon(eps_height)?,
            eps_wingspan: check_epsilon(eps_wingspan)?,
            bounds_height: Bounds::new(DEFAULT_HEIGHT_BOUNDS.0, DEFAULT_HEIGHT_BOUNDS.1)?,
            bounds_wingspan: Bounds::new(DEFAULT_WINGSPAN_BOUNDS.0, DEFAULT_WINGSPAN_BOUNDS.1)?,
        })
    }

    /// No noise on either attribute.
    pub fn disabled() -> Self {
        // infinity passes the epsilon check
        Self::uniform(f64::INFINITY).unwrap()
    }

    pub fn validate(&self) -> Result<(), PrivacyError> {
        check_epsilon(self.eps_height)?;
        check_epsilon(self.eps_wingspan)?;
        Ok(())
    }
}

impl Default for EpsilonConfig {
    fn default() -> Self {
        Self::uniform(1.0).unwrap()
    }
}

fn default_height_bounds() -> [f64; 2] {
    [DEFAULT_HEIGHT_BOUNDS.0, DEFAULT_HEIGHT_BOUNDS.1]
}

fn default_wingspan_bounds() -> [f64; 2] {
    [DEFAULT_WINGSPAN_BOUNDS.0, DEFAULT_WINGSPAN_BOUNDS.1]
}

/// On-disk privacy configuration (TOML).
///
/// ```toml
/// eps_height = 1.0
/// eps_wingspan = 1.0
/// bounds_height = [1.50, 1.95]
/// bounds_wingspan = [1.45, 2.05]
/// master_seed = 42
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacyConfigFile {
    pub eps_height: f64,
    pub eps_wingspan: f64,
    #[serde(default = "default_height_bounds")]
    pub bounds_height: [f64; 2],
    #[serde(default = "default_wingspan_bounds")]
    pub bounds_wingspan: [f64; 2],
    #[serde(default)]
    pub master_seed: u64,
}

impl PrivacyConfigFile {
    pub fn from_toml(text: &str) -> Result<Self, PrivacyError> {
        let file: Self = toml::from_str(text).map_err(|e| PrivacyError::Config(e.to_string()))?;
        file.epsilon_config()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, PrivacyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PrivacyError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn epsilon_config(&self) -> Result<EpsilonConfig, PrivacyError> {
        Ok(EpsilonConfig {
            eps_height: check_epsilon(self.eps_height)?,
            eps_wingspan: check_epsilon(self.eps_wingspan)?,
            bounds_height: Bounds::try_from(self.bounds_height)?,
            bounds_wingspan: Bounds::try_from(self.bounds_wingspan)?,
        })
    }
}
