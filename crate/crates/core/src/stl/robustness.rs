use std::cmp::Ordering;
use std::fmt;
use std::ops::Neg;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Extended real robustness value: finite, `+inf` or `-inf`.
///
/// Only min, max and negation are applied to robustness values, so the
/// infinities behave exactly as extended reals.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Robustness(f64);

impl Robustness {
    pub const POS_INF: Robustness = Robustness(f64::INFINITY);
    pub const NEG_INF: Robustness = Robustness(f64::NEG_INFINITY);
    pub const ZERO: Robustness = Robustness(0.0);

    /// Panics on NaN.
    pub fn new(v: f64) -> Self {
        assert!(!v.is_nan(), "robustness cannot be NaN");
        Robustness(v)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0.0
    }

    pub fn min(self, other: Self) -> Self {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }

    /// Total order; NaN cannot occur.
    pub fn cmp_total(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Neg for Robustness {
    type Output = Robustness;

    fn neg(self) -> Robustness {
        Robustness(-self.0)
    }
}

impl From<f64> for Robustness {
    fn from(v: f64) -> Self {
        Robustness::new(v)
    }
}

impl fmt::Display for Robustness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == f64::INFINITY {
            write!(f, "inf")
        } else if self.0 == f64::NEG_INFINITY {
            write!(f, "-inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

// JSON has no infinities; those are written as the strings "inf" / "-inf".
impl Serialize for Robustness {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Robustness {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Robustness(v)),
            Repr::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(Robustness::POS_INF),
                "-inf" => Ok(Robustness::NEG_INF),
                other => Err(serde::de::Error::custom(format!(
                    "bad robustness `{other}`"
                ))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extended_arithmetic() {
        assert_eq!(-Robustness::POS_INF, Robustness::NEG_INF);
        assert_eq!(
            Robustness::new(3.0).min(Robustness::NEG_INF),
            Robustness::NEG_INF
        );
        assert_eq!(
            Robustness::new(3.0).max(Robustness::NEG_INF),
            Robustness::new(3.0)
        );
        assert!(Robustness::NEG_INF < Robustness::new(-1e300));
    }

    #[test]
    fn json_infinities() {
        let v = vec![
            Robustness::POS_INF,
            Robustness::new(-2.5),
            Robustness::NEG_INF,
        ];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["inf",-2.5,"-inf"]"#);
        let back: Vec<Robustness> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
