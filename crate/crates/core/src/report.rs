//! Verified inequalities.

use serde::{Deserialize, Serialize};

/// Relative slack granted to every certified inequality.
pub const REPORT_SLACK: f64 = 1e-9;

/// One verified inequality `lhs <= claimed_constant * rhs`.
///
/// `ratio` is the measured `lhs / rhs` (0 when both sides vanish), so a
/// report passes exactly when `ratio` does not exceed the claimed constant
/// beyond [`REPORT_SLACK`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    #[serde(with = "extended_float")]
    pub claimed_constant: f64,
    #[serde(with = "extended_float")]
    pub measured_lhs: f64,
    #[serde(with = "extended_float")]
    pub measured_rhs: f64,
    #[serde(with = "extended_float")]
    pub ratio: f64,
    pub pass: bool,
    /// Human-readable description of the input achieving the ratio.
    pub witness: String,
    /// False once a condition folded in with [`BoundReport::and`] failed.
    #[serde(skip, default = "holds")]
    conditions_hold: bool,
}

fn holds() -> bool {
    true
}

impl BoundReport {
    pub fn new(
        name: impl Into<String>,
        claimed_constant: f64,
        lhs: f64,
        rhs: f64,
        witness: impl Into<String>,
    ) -> Self {
        let ratio = if lhs == 0.0 {
            0.0
        } else if rhs == 0.0 {
            f64::INFINITY
        } else {
            lhs / rhs
        };
        let pass = lhs <= claimed_constant * rhs * (1.0 + REPORT_SLACK);
        BoundReport {
            name: name.into(),
            claimed_constant,
            measured_lhs: lhs,
            measured_rhs: rhs,
            ratio,
            pass,
            witness: witness.into(),
            conditions_hold: true,
        }
    }

    /// A set-level assertion: passes iff `holds`. Encoded as `violations <= 0 * 1`.
    pub fn assertion(name: impl Into<String>, violations: usize, witness: impl Into<String>) -> Self {
        BoundReport::new(name, 0.0, violations as f64, 1.0, witness).and(violations == 0, "")
    }

    /// Folds an additional condition into the pass flag, appending its note to the witness.
    pub fn and(mut self, holds: bool, note: &str) -> Self {
        if !holds {
            self.pass = false;
            self.conditions_hold = false;
            if note.is_empty() {
                return self;
            }
            if !self.witness.is_empty() {
                self.witness.push_str("; ");
            }
            self.witness.push_str(note);
        }
        self
    }

    /// Re-evaluates the inequality with relative slack `slack` in place of
    /// [`REPORT_SLACK`]; failed side conditions stay failed.
    pub fn with_slack(mut self, slack: f64) -> Self {
        let numeric = self.measured_lhs <= self.claimed_constant * self.measured_rhs * (1.0 + slack);
        self.pass = numeric && self.conditions_hold;
        self
    }

    /// Margin between the claimed constant and the measured ratio.
    pub fn margin(&self) -> f64 {
        self.claimed_constant - self.ratio
    }
}

/// JSON has no infinities; they travel as the strings `"inf"`, `"-inf"` and `"nan"`.
pub mod extended_float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("expected a number, got {other:?}"))),
            },
        }
    }
}

/// Keeps the report with the largest `ratio / claimed_constant`.
pub(crate) fn worst(a: Option<BoundReport>, b: BoundReport) -> Option<BoundReport> {
    match a {
        None => Some(b),
        Some(a) => {
            if !b.pass && a.pass {
                return Some(b);
            }
            if !a.pass && b.pass {
                return Some(a);
            }
            let sa = normalized(&a);
            let sb = normalized(&b);
            if sb > sa {
                Some(b)
            } else {
                Some(a)
            }
        }
    }
}

fn normalized(r: &BoundReport) -> f64 {
    if r.claimed_constant > 0.0 {
        r.ratio / r.claimed_constant
    } else {
        r.ratio
    }
}
