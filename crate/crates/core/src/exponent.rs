//! Lebesgue exponents in `[1, ∞]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// An exponent `p ∈ [1, ∞]`. Infinity is a dedicated variant, never a large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(invalid(format!("exponent must be a finite number >= 1, got {p}")))
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn recip(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinite => 0.0,
        }
    }

    /// Hölder conjugate `p' = p / (p - 1)`; `1' = ∞`, `∞' = 1`.
    pub fn conjugate(self) -> Exponent {
        match self {
            Exponent::Infinite => Exponent::Finite(1.0),
            Exponent::Finite(p) if p == 1.0 => Exponent::Infinite,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    /// True when `self <= other` in `[1, ∞]`.
    pub fn le(self, other: Exponent) -> bool {
        self.value() <= other.value()
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "∞" => Ok(Exponent::Infinite),
            t => {
                let p: f64 = t
                    .parse()
                    .map_err(|_| invalid(format!("cannot parse exponent {t:?}")))?;
                if p.is_infinite() && p > 0.0 {
                    Ok(Exponent::Infinite)
                } else {
                    Exponent::finite(p)
                }
            }
        }
    }
}

/// Parses a comma-separated exponent list such as `1.5,2,4,inf`.
pub fn parse_exponent_list(s: &str) -> Result<Vec<Exponent>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect()
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(*p),
            Exponent::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Exponent::finite(p).map_err(serde::de::Error::custom),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugates() {
        assert_eq!(Exponent::Finite(2.0).conjugate(), Exponent::Finite(2.0));
        assert_eq!(Exponent::Infinite.conjugate(), Exponent::Finite(1.0));
        assert_eq!(Exponent::Finite(1.0).conjugate(), Exponent::Infinite);
        assert_eq!(Exponent::Finite(4.0).conjugate(), Exponent::Finite(4.0 / 3.0));
    }

    #[test]
    fn parsing() {
        assert_eq!(
            parse_exponent_list("1.5,2,4,inf").unwrap(),
            vec![
                Exponent::Finite(1.5),
                Exponent::Finite(2.0),
                Exponent::Finite(4.0),
                Exponent::Infinite
            ]
        );
        assert!("0.5".parse::<Exponent>().is_err());
        let e: Exponent = serde_json::from_str("\"inf\"").unwrap();
        assert!(e.is_infinite());
        assert_eq!(serde_json::to_string(&Exponent::Finite(3.0)).unwrap(), "3.0");
    }
}
