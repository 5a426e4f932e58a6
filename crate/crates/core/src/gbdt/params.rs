use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::GbdtError;

/// Positive-class gradient multiplier: fixed, or `#neg / #pos` of the
/// training labels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ScalePosWeight {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for ScalePosWeight {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Auto => serializer.serialize_str("auto"),
            Self::Fixed(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for ScalePosWeight {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = ScalePosWeight;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"auto\" or a positive number")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                match v {
                    "auto" => Ok(ScalePosWeight::Auto),
                    other => other
                        .parse()
                        .map(ScalePosWeight::Fixed)
                        .map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                Ok(ScalePosWeight::Fixed(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                Ok(ScalePosWeight::Fixed(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                Ok(ScalePosWeight::Fixed(v as f64))
            }
        }
        deserializer.deserialize_any(V)
    }
}

impl std::str::FromStr for ScalePosWeight {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        s.parse()
            .map(Self::Fixed)
            .map_err(|_| format!("expected \"auto\" or a number, got {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbdtParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub min_child_weight: f64,
    pub gamma: f64,
    pub lambda_reg: f64,
    pub scale_pos_weight: ScalePosWeight,
    pub random_state: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            n_estimators: 200,
            max_depth: 12,
            learning_rate: 0.3,
            subsample: 0.7,
            colsample_bytree: 0.8,
            min_child_weight: 5.0,
            gamma: 1.0,
            lambda_reg: 1.0,
            scale_pos_weight: ScalePosWeight::Auto,
            random_state: 42,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<(), GbdtError> {
        let fail = |msg: String| Err(GbdtError::InvalidParams(msg));
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !unit(self.subsample) {
            return fail(format!("subsample must be in (0, 1], got {}", self.subsample));
        }
        if !unit(self.colsample_bytree) {
            return fail(format!(
                "colsample_bytree must be in (0, 1], got {}",
                self.colsample_bytree
            ));
        }
        for (name, v) in [
            ("min_child_weight", self.min_child_weight),
            ("gamma", self.gamma),
            ("lambda_reg", self.lambda_reg),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} must be a finite value >= 0, got {v}"));
            }
        }
        if let ScalePosWeight::Fixed(w) = self.scale_pos_weight {
            if !(w > 0.0 && w.is_finite()) {
                return fail(format!("scale_pos_weight must be positive, got {w}"));
            }
        }
        Ok(())
    }
}
