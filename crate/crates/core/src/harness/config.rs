use std::fmt;
use std::path::Path;

use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::HarnessError;
use crate::attack::ModelKind;
use crate::privacy::{Bounds, EpsilonConfig, DEFAULT_HEIGHT_BOUNDS, DEFAULT_WINGSPAN_BOUNDS};

/// Experiment description, loadable from TOML.
///
/// ```toml
/// users = 50
/// sessions = 2
/// duration_s = 60
/// rate_hz = 30
/// seed = 7
/// chunks_s = [10, 60]
/// epsilons = ["inf", 5, 1, 0.1]
/// model = "nearest-centroid"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub users: usize,
    /// Session 1 trains the gallery; every later session is tested.
    pub sessions: u32,
    pub duration_s: f64,
    pub rate_hz: f64,
    pub seed: u64,
    pub chunks_s: Vec<f64>,
    /// Privacy budgets applied to both attributes. `inf` runs the defense as
    /// a passthrough.
    #[serde(with = "eps_list")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_model")]
    pub model: ModelKind,
    #[serde(default = "default_height_bounds")]
    pub bounds_height: [f64; 2],
    #[serde(default = "default_wingspan_bounds")]
    pub bounds_wingspan: [f64; 2],
}

fn default_model() -> ModelKind {
    ModelKind::NearestCentroid
}

fn default_height_bounds() -> [f64; 2] {
    [DEFAULT_HEIGHT_BOUNDS.0, DEFAULT_HEIGHT_BOUNDS.1]
}

fn default_wingspan_bounds() -> [f64; 2] {
    [DEFAULT_WINGSPAN_BOUNDS.0, DEFAULT_WINGSPAN_BOUNDS.1]
}

impl Default for ExperimentConfig {
    /// The standard benchmark.
    fn default() -> Self {
        Self {
            users: 50,
            sessions: 2,
            duration_s: 60.0,
            rate_hz: 30.0,
            seed: 7,
            chunks_s: vec![10.0, 60.0],
            epsilons: vec![f64::INFINITY, 5.0, 1.0, 0.1],
            model: ModelKind::NearestCentroid,
            bounds_height: default_height_bounds(),
            bounds_wingspan: default_wingspan_bounds(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.users < 2 {
            return bad(format!("need at least 2 users, got {}", self.users));
        }
        if self.sessions < 2 {
            return bad(format!("need at least 2 sessions, got {}", self.sessions));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            ));
        }
        if !(1.0..=1000.0).contains(&self.rate_hz) {
            return bad(format!("rate_hz {} outside [1, 1000]", self.rate_hz));
        }
        if self.chunks_s.is_empty() || self.epsilons.is_empty() {
            return bad("chunks_s and epsilons must be non-empty".into());
        }
        for &c in &self.chunks_s {
            if !(c > 0.0 && c.is_finite()) {
                return bad(format!("chunk length {c} must be positive"));
            }
            if c > self.duration_s + 1e-9 {
                return bad(format!("chunk length {c} exceeds session duration"));
            }
        }
        for &e in &self.epsilons {
            if !(e > 0.0) {
                return bad(format!("epsilon {e} must be positive"));
            }
        }
        self.epsilon_config(1.0)?;
        Ok(())
    }

    pub fn epsilon_config(&self, eps: f64) -> Result<EpsilonConfig, HarnessError> {
        let to_bounds =
            |b: [f64; 2]| Bounds::try_from(b).map_err(|e| HarnessError::Config(e.to_string()));
        let mut cfg =
            EpsilonConfig::uniform(eps).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.bounds_height = to_bounds(self.bounds_height)?;
        cfg.bounds_wingspan = to_bounds(self.bounds_wingspan)?;
        Ok(cfg)
    }
}

/// Text form of a budget: `inf` or the shortest round-trip decimal.
pub fn format_eps(eps: f64) -> String {
    if eps.is_infinite() {
        "inf".to_owned()
    } else {
        eps.to_string()
    }
}

/// Serde for a single budget: a number, or the string `"inf"`.
pub(crate) mod eps {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(EpsVisitor)
    }

    pub(super) struct EpsVisitor;

    impl Visitor<'_> for EpsVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a positive number or \"inf\"")
        }
        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }
        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }
        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" | "infinity" | "Infinity" => Ok(f64::INFINITY),
                other => other
                    .parse()
                    .map_err(|_| E::invalid_value(de::Unexpected::Str(other), &self)),
            }
        }
    }
}

pub(crate) mod eps_list {
    use super::*;

    struct Wrapped(f64);

    impl Serialize for Wrapped {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            eps::serialize(&self.0, s)
        }
    }

    impl<'de> Deserialize<'de> for Wrapped {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            eps::deserialize(d).map(Wrapped)
        }
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|e| Wrapped(*e)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        struct ListVisitor;
        impl<'de> Visitor<'de> for ListVisitor {
            type Value = Vec<f64>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a list of budgets")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Vec<f64>, A::Error> {
                let mut out = Vec::new();
                while let Some(Wrapped(v)) = seq.next_element()? {
                    out.push(v);
                }
                Ok(out)
            }
        }
        d.deserialize_seq(ListVisitor)
    }
}
