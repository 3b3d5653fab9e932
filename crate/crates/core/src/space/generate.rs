//! Space generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{close_metric, MetricMeasureSpace};
use crate::error::{invalid, Error, Result};

/// Point masses for a generated space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WeightSpec {
    #[default]
    Unit,
    /// Independent uniform masses in `[lo, hi]`.
    Random { seed: u64, lo: f64, hi: f64 },
    Explicit { values: Vec<f64> },
}

/// Metric families understood by [`generate_space`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// `n` points at `0, s, 2s, …` on the real line.
    Line {
        n: usize,
        #[serde(default = "one")]
        spacing: f64,
    },
    /// `rows × cols` lattice with spacing `s` and the `ℓ^p` distance.
    Grid {
        rows: usize,
        cols: usize,
        #[serde(default = "one")]
        spacing: f64,
        #[serde(default = "two")]
        p: f64,
    },
    /// Shortest-path metric of a weighted undirected graph.
    GraphShortestPath {
        n: usize,
        edges: Vec<(usize, usize, f64)>,
    },
    /// `2^levels` leaves with `d(i, j) = base^(msb(i xor j))`.
    UltrametricDyadic {
        levels: u32,
        #[serde(default = "two")]
        base: f64,
    },
    /// `d^alpha` of an inner metric, `alpha ∈ (0, 1)`.
    Snowflake {
        inner: Box<GeneratorKind>,
        alpha: f64,
    },
    /// Distinct uniform points in `[0, scale]^dim` with the Euclidean distance.
    RandomPoints {
        n: usize,
        dim: usize,
        seed: u64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

/// A generator plus the point masses to attach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    #[serde(default)]
    pub weights: WeightSpec,
}

impl SpaceSpec {
    pub fn unit(kind: GeneratorKind) -> Self {
        SpaceSpec {
            kind,
            weights: WeightSpec::Unit,
        }
    }
}

impl From<GeneratorKind> for SpaceSpec {
    fn from(kind: GeneratorKind) -> Self {
        SpaceSpec::unit(kind)
    }
}

/// Builds a validated space; deterministic for a given spec.
pub fn generate_space(spec: &SpaceSpec) -> Result<MetricMeasureSpace> {
    let (n, dist) = distances(&spec.kind)?;
    let weight = match &spec.weights {
        WeightSpec::Unit => vec![1.0; n],
        WeightSpec::Random { seed, lo, hi } => {
            if !(lo.is_finite() && hi.is_finite() && *lo > 0.0 && lo <= hi) {
                return Err(invalid(format!("random weights need 0 < lo <= hi, got [{lo}, {hi}]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..n)
                .map(|_| if lo == hi { *lo } else { rng.gen_range(*lo..*hi) })
                .collect()
        }
        WeightSpec::Explicit { values } => values.clone(),
    };
    MetricMeasureSpace::from_flat(n, dist, weight)
}

pub(crate) fn distances(kind: &GeneratorKind) -> Result<(usize, Vec<f64>)> {
    match kind {
        GeneratorKind::Line { n, spacing } => {
            positive_count(*n, "line")?;
            positive_finite(*spacing, "spacing")?;
            let n = *n;
            let mut dist: Vec<f64> = (0..n * n)
                .map(|ij| (ij / n).abs_diff(ij % n) as f64 * spacing)
                .collect();
            close_metric(n, &mut dist);
            Ok((n, dist))
        }
        GeneratorKind::Grid {
            rows,
            cols,
            spacing,
            p,
        } => {
            positive_count(*rows, "grid rows")?;
            positive_count(*cols, "grid cols")?;
            positive_finite(*spacing, "spacing")?;
            let coords: Vec<Vec<f64>> = (0..rows * cols)
                .map(|k| vec![(k / cols) as f64 * spacing, (k % cols) as f64 * spacing])
                .collect();
            lp_distances(&coords, *p)
        }
        GeneratorKind::GraphShortestPath { n, edges } => graph_distances(*n, edges),
        GeneratorKind::UltrametricDyadic { levels, base } => {
            if *levels > 12 {
                return Err(invalid(format!("ultrametric depth {levels} exceeds 12")));
            }
            if !(base.is_finite() && *base > 1.0) {
                return Err(invalid(format!("ultrametric base must exceed 1, got {base}")));
            }
            let n = 1usize << levels;
            let dist = (0..n * n)
                .map(|ij| {
                    let x = (ij / n) ^ (ij % n);
                    if x == 0 {
                        0.0
                    } else {
                        base.powi((usize::BITS - 1 - x.leading_zeros()) as i32)
                    }
                })
                .collect();
            Ok((n, dist))
        }
        GeneratorKind::Snowflake { inner, alpha } => {
            if !(*alpha > 0.0 && *alpha < 1.0) {
                return Err(invalid(format!("snowflake exponent must lie in (0, 1), got {alpha}")));
            }
            let (n, inner) = distances(inner)?;
            Ok((n, snowflake(n, inner, *alpha)))
        }
        GeneratorKind::RandomPoints {
            n,
            dim,
            seed,
            scale,
        } => {
            positive_count(*n, "random point count")?;
            positive_count(*dim, "dimension")?;
            positive_finite(*scale, "scale")?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut coords: Vec<Vec<f64>> = Vec::with_capacity(*n);
            while coords.len() < *n {
                let c: Vec<f64> = (0..*dim).map(|_| rng.gen::<f64>() * scale).collect();
                if !coords.contains(&c) {
                    coords.push(c);
                }
            }
            lp_distances(&coords, 2.0)
        }
    }
}

pub(crate) fn snowflake(n: usize, mut dist: Vec<f64>, alpha: f64) -> Vec<f64> {
    for d in dist.iter_mut() {
        *d = d.powf(alpha);
    }
    close_metric(n, &mut dist);
    dist
}

/// `ℓ^p` distances between coordinate rows (`p = ∞` allowed), closed so the
/// stored values satisfy the triangle inequality exactly.
pub(crate) fn lp_distances(coords: &[Vec<f64>], p: f64) -> Result<(usize, Vec<f64>)> {
    if !(p >= 1.0) {
        return Err(invalid(format!("ℓ^p exponent must be >= 1, got {p}")));
    }
    let n = coords.len();
    positive_count(n, "coordinate rows")?;
    let dim = coords[0].len();
    if let Some(bad) = coords.iter().position(|c| c.len() != dim) {
        return Err(invalid(format!("coordinate row {bad} has the wrong dimension")));
    }
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = lp(&coords[i], &coords[j], p);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    close_metric(n, &mut dist);
    Ok((n, dist))
}

fn lp(a: &[f64], b: &[f64], p: f64) -> f64 {
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    if p.is_infinite() {
        diffs.fold(0.0, f64::max)
    } else if p == 1.0 {
        diffs.sum()
    } else if p == 2.0 {
        diffs.map(|t| t * t).sum::<f64>().sqrt()
    } else {
        diffs.map(|t| t.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

pub(crate) fn graph_distances(n: usize, edges: &[(usize, usize, f64)]) -> Result<(usize, Vec<f64>)> {
    positive_count(n, "graph")?;
    let mut dist = vec![f64::INFINITY; n * n];
    for i in 0..n {
        dist[i * n + i] = 0.0;
    }
    for &(i, j, w) in edges {
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange { index: i.max(j), n });
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(invalid(format!("edge ({i}, {j}) has non-positive length {w}")));
        }
        if i != j && w < dist[i * n + j] {
            dist[i * n + j] = w;
            dist[j * n + i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i * n + k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = dik + dist[k * n + j];
                if via < dist[i * n + j] {
                    dist[i * n + j] = via;
                }
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if dist[i * n + j].is_infinite() {
                return Err(Error::Disconnected { i, j });
            }
            // Floyd–Warshall may round the two directions differently.
            let m = dist[i * n + j].min(dist[j * n + i]);
            dist[i * n + j] = m;
            dist[j * n + i] = m;
        }
    }
    close_metric(n, &mut dist);
    Ok((n, dist))
}

fn positive_count(n: usize, what: &str) -> Result<()> {
    if n == 0 {
        Err(invalid(format!("{what} needs at least one point")))
    } else {
        Ok(())
    }
}

fn positive_finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{what} must be positive and finite, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_generator() {
        let s = generate_space(&GeneratorKind::Line { n: 5, spacing: 1.0 }.into()).unwrap();
        assert_eq!(s.d(0, 4), 4.0);
        assert_eq!(s.total_mass(), 5.0);
    }

    #[test]
    fn snowflake_of_line() {
        let s = generate_space(
            &GeneratorKind::Snowflake {
                inner: Box::new(GeneratorKind::Line { n: 5, spacing: 1.0 }),
                alpha: 0.5,
            }
            .into(),
        )
        .unwrap();
        assert_eq!(s.d(0, 4), 2.0);
        assert_eq!(s.d(1, 2), 1.0);
    }

    #[test]
    fn snowflake_rejects_bad_alpha() {
        for alpha in [0.0, 1.0, 1.5] {
            let spec = GeneratorKind::Snowflake {
                inner: Box::new(GeneratorKind::Line { n: 3, spacing: 1.0 }),
                alpha,
            };
            assert!(matches!(generate_space(&spec.into()), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let spec = GeneratorKind::GraphShortestPath {
            n: 4,
            edges: vec![(0, 1, 1.0), (2, 3, 1.0)],
        };
        assert!(matches!(generate_space(&spec.into()), Err(Error::Disconnected { i: 0, j: 2 })));
    }

    #[test]
    fn graph_path_metric() {
        let spec = GeneratorKind::GraphShortestPath {
            n: 3,
            edges: vec![(0, 1, 1.0), (1, 2, 2.0), (0, 2, 5.0)],
        };
        let s = generate_space(&spec.into()).unwrap();
        assert_eq!(s.d(0, 2), 3.0);
    }

    #[test]
    fn ultrametric_is_strong() {
        let s = generate_space(&GeneratorKind::UltrametricDyadic { levels: 3, base: 2.0 }.into()).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                for k in 0..8 {
                    assert!(s.d(i, k) <= s.d(i, j).max(s.d(j, k)));
                }
            }
        }
        assert_eq!(s.d(0, 1), 1.0);
        assert_eq!(s.d(0, 7), 4.0);
    }

    #[test]
    fn random_points_are_seeded() {
        let spec: SpaceSpec = GeneratorKind::RandomPoints {
            n: 30,
            dim: 2,
            seed: 9,
            scale: 1.0,
        }
        .into();
        assert_eq!(generate_space(&spec).unwrap(), generate_space(&spec).unwrap());
    }

    #[test]
    fn random_weights() {
        let spec = SpaceSpec {
            kind: GeneratorKind::Line { n: 10, spacing: 1.0 },
            weights: WeightSpec::Random {
                seed: 1,
                lo: 0.5,
                hi: 2.0,
            },
        };
        let s = generate_space(&spec).unwrap();
        assert!(s.weights().iter().all(|&w| (0.5..2.0).contains(&w)));
    }
}
