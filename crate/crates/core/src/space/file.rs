//! JSON space files.
//!
//! ```json
//! {"n": 3, "metric": {"type": "matrix", "data": [[0,1,2],[1,0,1],[2,1,0]]}, "weights": [1,1,1]}
//! ```
//!
//! Other metric types: `{"type": "euclidean", "coords": [[..]], "p": 2}`,
//! `{"type": "graph", "edges": [[i, j, w]]}` and
//! `{"type": "snowflake", "inner": <metric>, "alpha": 0.5}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::generate::{graph_distances, lp_distances, snowflake};
use super::MetricMeasureSpace;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MetricSpec {
    Matrix {
        data: Vec<Vec<f64>>,
    },
    Euclidean {
        coords: Vec<Vec<f64>>,
        #[serde(default = "default_p")]
        p: f64,
    },
    Graph {
        edges: Vec<(usize, usize, f64)>,
    },
    Snowflake {
        inner: Box<MetricSpec>,
        alpha: f64,
    },
}

fn default_p() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub n: usize,
    pub metric: MetricSpec,
    pub weights: Vec<f64>,
}

impl SpaceFile {
    pub fn to_space(&self) -> Result<MetricMeasureSpace> {
        let dist = metric_distances(&self.metric, self.n)?;
        MetricMeasureSpace::from_flat(self.n, dist, self.weights.clone())
    }

    /// Matrix-form description of an existing space.
    pub fn from_space(space: &MetricMeasureSpace) -> Self {
        SpaceFile {
            n: space.len(),
            metric: MetricSpec::Matrix {
                data: space.to_rows(),
            },
            weights: space.weights().to_vec(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

impl MetricMeasureSpace {
    /// Reads and validates a JSON space file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        SpaceFile::load(path)?.to_space()
    }
}

fn metric_distances(metric: &MetricSpec, n: usize) -> Result<Vec<f64>> {
    let (m, dist) = match metric {
        MetricSpec::Matrix { data } => {
            if data.len() != n {
                return Err(Error::Shape {
                    rows: data.len(),
                    expected: n,
                });
            }
            let mut flat = Vec::with_capacity(n * n);
            for (row, r) in data.iter().enumerate() {
                if r.len() != n {
                    return Err(Error::Ragged { row, len: r.len(), n });
                }
                flat.extend_from_slice(r);
            }
            (n, flat)
        }
        MetricSpec::Euclidean { coords, p } => lp_distances(coords, *p)?,
        MetricSpec::Graph { edges } => graph_distances(n, edges)?,
        MetricSpec::Snowflake { inner, alpha } => {
            if !(*alpha > 0.0 && *alpha < 1.0) {
                return Err(invalid(format!("snowflake exponent must lie in (0, 1), got {alpha}")));
            }
            (n, snowflake(n, metric_distances(inner, n)?, *alpha))
        }
    };
    if m != n {
        return Err(Error::Shape { rows: m, expected: n });
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_metric_type() {
        let matrix = r#"{"n": 2, "metric": {"type": "matrix", "data": [[0,1],[1,0]]}, "weights": [1,2]}"#;
        let s = serde_json::from_str::<SpaceFile>(matrix).unwrap().to_space().unwrap();
        assert_eq!(s.total_mass(), 3.0);

        let eu = r#"{"n": 3, "metric": {"type": "euclidean", "coords": [[0,0],[3,0],[3,4]]}, "weights": [1,1,1]}"#;
        let s = serde_json::from_str::<SpaceFile>(eu).unwrap().to_space().unwrap();
        assert_eq!(s.d(0, 2), 5.0);

        let graph = r#"{"n": 3, "metric": {"type": "graph", "edges": [[0,1,1],[1,2,1]]}, "weights": [1,1,1]}"#;
        let s = serde_json::from_str::<SpaceFile>(graph).unwrap().to_space().unwrap();
        assert_eq!(s.d(0, 2), 2.0);

        let snow = r#"{"n": 3, "metric": {"type": "snowflake", "alpha": 0.5,
            "inner": {"type": "graph", "edges": [[0,1,1],[1,2,3]]}}, "weights": [1,1,1]}"#;
        let s = serde_json::from_str::<SpaceFile>(snow).unwrap().to_space().unwrap();
        assert_eq!(s.d(0, 2), 2.0);
    }

    #[test]
    fn round_trips_through_matrix_form() {
        let s = SpaceFile {
            n: 3,
            metric: MetricSpec::Euclidean {
                coords: vec![vec![0.0], vec![0.5], vec![2.0]],
                p: 2.0,
            },
            weights: vec![1.0, 0.5, 2.0],
        }
        .to_space()
        .unwrap();
        let again = SpaceFile::from_space(&s).to_space().unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn shape_mismatch() {
        let f = SpaceFile {
            n: 3,
            metric: MetricSpec::Matrix {
                data: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            },
            weights: vec![1.0; 3],
        };
        assert!(matches!(f.to_space(), Err(Error::Shape { .. })));
    }
}
