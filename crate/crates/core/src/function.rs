//! Vector-valued functions on a finite space.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::exponent::Exponent;
use crate::space::MetricMeasureSpace;

/// The coordinate norm `|f(x)|` of a vector value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum VecNorm {
    L1,
    #[default]
    L2,
    LInf,
    Lq(f64),
}

impl VecNorm {
    pub fn apply(self, v: &[f64]) -> f64 {
        match self {
            VecNorm::L1 => v.iter().map(|t| t.abs()).sum(),
            VecNorm::L2 => {
                if v.len() == 1 {
                    v[0].abs()
                } else {
                    v.iter().map(|t| t * t).sum::<f64>().sqrt()
                }
            }
            VecNorm::LInf => v.iter().fold(0.0, |m, t| m.max(t.abs())),
            VecNorm::Lq(q) => v.iter().map(|t| t.abs().powf(q)).sum::<f64>().powf(1.0 / q),
        }
    }
}

impl fmt::Display for VecNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VecNorm::L1 => f.write_str("l1"),
            VecNorm::L2 => f.write_str("l2"),
            VecNorm::LInf => f.write_str("linf"),
            VecNorm::Lq(q) => write!(f, "l{q}"),
        }
    }
}

impl FromStr for VecNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let rest = t
            .strip_prefix('l')
            .ok_or_else(|| invalid(format!("unknown coordinate norm {s:?}")))?;
        match rest {
            "1" => Ok(VecNorm::L1),
            "2" => Ok(VecNorm::L2),
            "inf" | "∞" => Ok(VecNorm::LInf),
            q => match q.parse::<f64>() {
                Ok(q) if q.is_finite() && q >= 1.0 => Ok(VecNorm::Lq(q)),
                _ => Err(invalid(format!("unknown coordinate norm {s:?}"))),
            },
        }
    }
}

impl Serialize for VecNorm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VecNorm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A function `X → R^m` stored as an `n × m` row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionOnSpace {
    n: usize,
    m: usize,
    values: Vec<f64>,
    #[serde(default)]
    norm: VecNorm,
}

impl FunctionOnSpace {
    pub fn new(n: usize, m: usize, values: Vec<f64>, norm: VecNorm) -> Result<Self> {
        if m == 0 {
            return Err(invalid("functions need at least one coordinate"));
        }
        if values.len() != n * m {
            return Err(invalid(format!(
                "{} values supplied for a {n} × {m} function",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value at row {}", bad / m)));
        }
        Ok(FunctionOnSpace { n, m, values, norm })
    }

    /// Scalar function from one value per point.
    pub fn scalar(values: Vec<f64>) -> Self {
        let n = values.len();
        FunctionOnSpace::new(n, 1, values, VecNorm::L2).expect("finite scalar values")
    }

    pub fn from_rows(rows: &[Vec<f64>], norm: VecNorm) -> Result<Self> {
        let m = rows.first().map_or(1, |r| r.len());
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(invalid(format!("row {bad} has the wrong number of coordinates")));
        }
        FunctionOnSpace::new(rows.len(), m, rows.concat(), norm)
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        FunctionOnSpace::new(n, m, vec![0.0; n * m], VecNorm::L2).expect("m >= 1")
    }

    /// `height · e_x`, the scalar spike at point `x`.
    pub fn spike(n: usize, x: usize, height: f64) -> Self {
        let mut v = vec![0.0; n];
        v[x] = height;
        FunctionOnSpace::scalar(v)
    }

    pub fn constant(n: usize, c: f64) -> Self {
        FunctionOnSpace::scalar(vec![c; n])
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn norm_kind(&self) -> VecNorm {
        self.norm
    }

    pub fn with_norm(mut self, norm: VecNorm) -> Self {
        self.norm = norm;
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, x: usize) -> &[f64] {
        &self.values[x * self.m..(x + 1) * self.m]
    }

    #[inline]
    pub fn row_mut(&mut self, x: usize) -> &mut [f64] {
        &mut self.values[x * self.m..(x + 1) * self.m]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|x| self.row(x).to_vec()).collect()
    }

    /// `|f(x)|` in the declared coordinate norm.
    #[inline]
    pub fn abs_at(&self, x: usize) -> f64 {
        self.norm.apply(self.row(x))
    }

    pub fn abs(&self) -> Vec<f64> {
        (0..self.n).map(|x| self.abs_at(x)).collect()
    }

    /// Points where the row is nonzero.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&x| self.row(x).iter().any(|&v| v != 0.0))
            .collect()
    }

    pub fn check_space(&self, space: &MetricMeasureSpace) -> Result<()> {
        if self.n == space.len() {
            Ok(())
        } else {
            Err(invalid(format!(
                "function has {} rows but the space has {} points",
                self.n,
                space.len()
            )))
        }
    }

    pub fn lp_norm(&self, space: &MetricMeasureSpace, p: Exponent) -> f64 {
        lp_norm_of(space, &self.abs(), p)
    }

    pub fn l1_norm(&self, space: &MetricMeasureSpace) -> f64 {
        self.lp_norm(space, Exponent::Finite(1.0))
    }

    pub fn sup_norm(&self) -> f64 {
        self.abs().into_iter().fold(0.0, f64::max)
    }

    /// Vector average `Σ_y (μ{y} / μ(S)) f(y)` over a set; exact on singletons.
    pub fn average_over(&self, space: &MetricMeasureSpace, set: &[usize]) -> Vec<f64> {
        let total: f64 = set.iter().map(|&y| space.weight(y)).sum();
        let mut avg = vec![0.0; self.m];
        for &y in set {
            let t = space.weight(y) / total;
            for (a, v) in avg.iter_mut().zip(self.row(y)) {
                *a += t * v;
            }
        }
        avg
    }

    /// Integral `Σ_y f(y) μ{y}`, per coordinate.
    pub fn integral(&self, space: &MetricMeasureSpace) -> Vec<f64> {
        let mut acc = vec![0.0; self.m];
        for y in 0..self.n {
            let w = space.weight(y);
            for (a, v) in acc.iter_mut().zip(self.row(y)) {
                *a += v * w;
            }
        }
        acc
    }

    pub fn add(&self, other: &FunctionOnSpace) -> FunctionOnSpace {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &FunctionOnSpace) -> FunctionOnSpace {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> FunctionOnSpace {
        FunctionOnSpace {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    fn zip_with(&self, other: &FunctionOnSpace, op: impl Fn(f64, f64) -> f64) -> FunctionOnSpace {
        assert_eq!((self.n, self.m), (other.n, other.m), "function shapes differ");
        FunctionOnSpace {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| op(a, b))
                .collect(),
            ..self.clone()
        }
    }

    /// `χ_S f`.
    pub fn restrict(&self, set: &[usize]) -> FunctionOnSpace {
        let mut out = FunctionOnSpace {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        };
        for &x in set {
            out.row_mut(x).copy_from_slice(self.row(x));
        }
        out
    }

    /// Reads a function from JSON (an array of rows, or `{"values": rows, "norm": "l2"}`)
    /// or from headerless CSV with one row per point.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: shown.clone(),
            source,
        })?;
        let parse_err = |message: String| Error::Parse {
            path: shown.clone(),
            message,
        };
        let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with(['[', '{']);
        if is_json {
            #[derive(Deserialize)]
            #[serde(untagged)]
            enum Raw {
                Rows(Vec<Vec<f64>>),
                Flat(Vec<f64>),
                Object {
                    values: Vec<Vec<f64>>,
                    #[serde(default)]
                    norm: VecNorm,
                },
            }
            match serde_json::from_str::<Raw>(&text).map_err(|e| parse_err(e.to_string()))? {
                Raw::Rows(rows) => FunctionOnSpace::from_rows(&rows, VecNorm::L2),
                Raw::Flat(v) => Ok(FunctionOnSpace::scalar(v)),
                Raw::Object { values, norm } => FunctionOnSpace::from_rows(&values, norm),
            }
        } else {
            let rows = read_csv_rows(&text).map_err(parse_err)?;
            FunctionOnSpace::from_rows(&rows, VecNorm::L2)
        }
    }
}

/// Numeric CSV rows; a non-numeric first line is treated as a header.
pub(crate) fn read_csv_rows(text: &str) -> std::result::Result<Vec<Vec<f64>>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(format!("line {}: {e}", i + 1)),
        }
    }
    Ok(rows)
}

/// `(Σ_x |v(x)|^p μ{x})^{1/p}`, or `max_x |v(x)|` for `p = ∞`.
pub fn lp_norm_of(space: &MetricMeasureSpace, v: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::Infinite => v.iter().fold(0.0, |m, t| m.max(t.abs())),
        Exponent::Finite(p) if p == 1.0 => v.iter().zip(space.weights()).map(|(t, w)| t.abs() * w).sum(),
        Exponent::Finite(p) => v
            .iter()
            .zip(space.weights())
            .map(|(t, w)| t.abs().powf(p) * w)
            .sum::<f64>()
            .powf(1.0 / p),
    }
}
