//! Finite metric measure spaces.
//!
//! A [`MetricMeasureSpace`] stores a dense distance matrix and a strictly
//! positive weight for every point, so every ball has finite positive
//! measure. Balls are open: `B(x, r) = {y : d(x, y) < r}`.

mod doubling;
mod file;
mod generate;
mod net;

pub use doubling::{doubling_constant, doubling_profile, DoublingProfile};
pub use file::{MetricSpec, SpaceFile};
pub use generate::{generate_space, GeneratorKind, SpaceSpec, WeightSpec};
pub use net::{separated_net, SeparatedNet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest size for which every triple is checked when validating the
/// triangle inequality. Above it a fixed-seed sample of triples is checked.
pub const FULL_TRIANGLE_CHECK_MAX_N: usize = 1200;
const SAMPLED_TRIPLES: usize = 20_000_000;

/// An open ball `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: usize, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn contains(&self, space: &MetricMeasureSpace, y: usize) -> bool {
        space.d(self.center, y) < self.radius
    }
}

/// Finite point set with a validated distance matrix and positive point masses.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMeasureSpace {
    n: usize,
    dist: Vec<f64>,
    weight: Vec<f64>,
    critical: Vec<f64>,
    total_mass: f64,
}

impl MetricMeasureSpace {
    /// Builds a space from a row-per-point distance matrix, validating every
    /// metric axiom eagerly.
    pub fn new(dist: Vec<Vec<f64>>, weight: Vec<f64>) -> Result<Self> {
        let n = weight.len();
        if dist.len() != n {
            return Err(Error::Shape {
                rows: dist.len(),
                expected: n,
            });
        }
        let mut flat = Vec::with_capacity(n * n);
        for (row, r) in dist.iter().enumerate() {
            if r.len() != n {
                return Err(Error::Ragged {
                    row,
                    len: r.len(),
                    n,
                });
            }
            flat.extend_from_slice(r);
        }
        Self::from_flat(n, flat, weight)
    }

    /// Builds a space from a row-major `n * n` distance buffer.
    pub fn from_flat(n: usize, dist: Vec<f64>, weight: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        if dist.len() != n * n {
            return Err(Error::Shape {
                rows: dist.len() / n.max(1),
                expected: n,
            });
        }
        if weight.len() != n {
            return Err(Error::WeightLength {
                len: weight.len(),
                n,
            });
        }
        for (i, &w) in weight.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::NonPositiveWeight { i, value: w });
            }
        }
        check_pointwise_axioms(n, &dist)?;
        check_triangle(n, &dist)?;
        Ok(Self::assemble(n, dist, weight))
    }

    fn assemble(n: usize, dist: Vec<f64>, weight: Vec<f64>) -> Self {
        let mut critical: Vec<f64> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| dist[i * n + j])
            .collect();
        critical.sort_by(f64::total_cmp);
        critical.dedup();
        let total_mass = weight.iter().sum();
        MetricMeasureSpace {
            n,
            dist,
            weight,
            critical,
            total_mass,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Row `i` of the distance matrix.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weight[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    /// Sorted, deduplicated positive pairwise distances.
    pub fn critical_distances(&self) -> &[f64] {
        &self.critical
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn diameter(&self) -> f64 {
        self.critical.last().copied().unwrap_or(0.0)
    }

    /// Smallest positive distance, or `None` for a single point.
    pub fn min_distance(&self) -> Option<f64> {
        self.critical.first().copied()
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index, n: self.n })
        }
    }

    pub fn check_indices(&self, set: &[usize]) -> Result<()> {
        set.iter().try_for_each(|&i| self.check_index(i))
    }

    /// Indices `y` with `d(x, y) < r`, in increasing order.
    pub fn ball_members(&self, x: usize, r: f64) -> Result<Vec<usize>> {
        self.check_index(x)?;
        Ok(self
            .row(x)
            .iter()
            .enumerate()
            .filter(|(_, &d)| d < r)
            .map(|(y, _)| y)
            .collect())
    }

    /// `μ(B(x, r))`, summed in index order.
    pub fn ball_measure(&self, x: usize, r: f64) -> f64 {
        self.row(x)
            .iter()
            .zip(&self.weight)
            .filter(|(&d, _)| d < r)
            .map(|(_, &w)| w)
            .sum()
    }

    pub fn measure(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.weight[i]).sum()
    }

    /// Diameter of a subset (0 for sets with fewer than two points).
    pub fn set_diameter(&self, set: &[usize]) -> f64 {
        let mut diam = 0.0f64;
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                diam = diam.max(self.d(i, j));
            }
        }
        diam
    }

    /// `d(x, S) = min_{s ∈ S} d(x, s)`; infinite for an empty set.
    pub fn dist_to_set(&self, x: usize, set: &[usize]) -> f64 {
        set.iter()
            .map(|&s| self.d(x, s))
            .fold(f64::INFINITY, f64::min)
    }

    /// The open neighbourhood `B(S, ρ) = {y : d(y, S) < ρ}`.
    pub fn neighborhood(&self, set: &[usize], rho: f64) -> Vec<usize> {
        (0..self.n)
            .filter(|&y| set.iter().any(|&s| self.d(y, s) < rho))
            .collect()
    }

    /// Distance profile of the balls centred at `x`.
    pub fn radial_profile(&self, x: usize) -> RadialProfile {
        RadialProfile::new(self, x)
    }

    /// Subspace induced by `points` (kept in the given order).
    pub fn subspace(&self, points: &[usize]) -> Result<Self> {
        self.check_indices(points)?;
        let m = points.len();
        let mut dist = Vec::with_capacity(m * m);
        for &i in points {
            for &j in points {
                dist.push(self.d(i, j));
            }
        }
        let weight = points.iter().map(|&i| self.weight[i]).collect();
        Self::from_flat(m, dist, weight)
    }

    /// Same metric with different point masses.
    pub fn with_weights(&self, weight: Vec<f64>) -> Result<Self> {
        if weight.len() != self.n {
            return Err(Error::WeightLength {
                len: weight.len(),
                n: self.n,
            });
        }
        for (i, &w) in weight.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::NonPositiveWeight { i, value: w });
            }
        }
        Ok(Self::assemble(self.n, self.dist.clone(), weight))
    }

    /// Distance matrix as nested rows.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Sorted distance groups around a centre `x`.
///
/// `radii[k]` is the k-th distinct distance from `x` (with `radii[0] = 0`)
/// and `members[k]` the points at that distance. The closed prefix
/// `{y : d(x, y) <= radii[k]}` is the open ball `B(x, r)` for every
/// `r ∈ (radii[k], radii[k + 1]]`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub center: usize,
    pub radii: Vec<f64>,
    pub members: Vec<Vec<usize>>,
    /// `cumulative[k] = μ({y : d(x, y) <= radii[k]})`.
    pub cumulative: Vec<f64>,
}

impl RadialProfile {
    fn new(space: &MetricMeasureSpace, x: usize) -> Self {
        let mut order: Vec<usize> = (0..space.len()).collect();
        let row = space.row(x);
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        let mut radii = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for y in order {
            let d = row[y];
            if radii.last() == Some(&d) {
                members.last_mut().unwrap().push(y);
            } else {
                radii.push(d);
                members.push(vec![y]);
            }
        }
        let mut cumulative = Vec::with_capacity(radii.len());
        let mut acc = 0.0;
        for group in &members {
            for &y in group {
                acc += space.weight(y);
            }
            cumulative.push(acc);
        }
        RadialProfile {
            center: x,
            radii,
            members,
            cumulative,
        }
    }

    /// Number of distance groups strictly inside radius `r`.
    pub fn groups_within(&self, r: f64) -> usize {
        self.radii.partition_point(|&d| d < r)
    }

    /// `μ(B(center, r))`; zero when `r <= 0`.
    pub fn measure(&self, r: f64) -> f64 {
        match self.groups_within(r) {
            0 => 0.0,
            k => self.cumulative[k - 1],
        }
    }
}

fn check_pointwise_axioms(n: usize, dist: &[f64]) -> Result<()> {
    for i in 0..n {
        let dii = dist[i * n + i];
        if dii != 0.0 {
            return Err(Error::NonzeroDiagonal { i, value: dii });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = dist[i * n + j];
            let dji = dist[j * n + i];
            if dij != dji && !(dij.is_nan() && dji.is_nan()) {
                return Err(Error::Asymmetric { i, j, dij, dji });
            }
            if !(dij.is_finite() && dij > 0.0) {
                return Err(Error::NonPositiveDistance { i, j, value: dij });
            }
        }
    }
    Ok(())
}

/// First violated triple in `(i, k, j)` lexicographic order, if any.
pub(crate) fn triangle_violation(n: usize, dist: &[f64]) -> Option<(usize, usize, usize)> {
    if n <= FULL_TRIANGLE_CHECK_MAX_N {
        (0..n).into_par_iter().find_map_first(|i| {
            let ri = &dist[i * n..(i + 1) * n];
            for k in (i + 1)..n {
                let dik = ri[k];
                for j in 0..n {
                    if dik > ri[j] + dist[j * n + k] {
                        return Some((i, k, j));
                    }
                }
            }
            None
        })
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x7472_6961_6e67_6c65);
        (0..SAMPLED_TRIPLES).find_map(|_| {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            let k = rng.gen_range(0..n);
            (dist[i * n + k] > dist[i * n + j] + dist[j * n + k]).then_some((i, k, j))
        })
    }
}

fn check_triangle(n: usize, dist: &[f64]) -> Result<()> {
    match triangle_violation(n, dist) {
        None => Ok(()),
        Some((i, k, j)) => Err(Error::Triangle {
            i,
            j,
            k,
            dik: dist[i * n + k],
            dij: dist[i * n + j],
            djk: dist[j * n + k],
        }),
    }
}

/// Repeated min-plus relaxation `d(i,k) <- min_j d(i,j) + d(j,k)` until the
/// stored floats satisfy the triangle inequality exactly.
///
/// Each pass reads the previous matrix only, so symmetry is preserved. Used
/// for derived metrics (Euclidean, snowflake, graph) whose closed-form
/// values can violate the inequality by an ulp.
pub(crate) fn close_metric(n: usize, dist: &mut [f64]) {
    while triangle_violation_full(n, dist) {
        for k in 0..n {
            // Row k is fixed while pivoting on k (d(k, k) = 0).
            let rk = dist[k * n..(k + 1) * n].to_vec();
            dist.par_chunks_mut(n).for_each(|row| {
                let dik = row[k];
                for (out, &dkj) in row.iter_mut().zip(&rk) {
                    let via = dik + dkj;
                    if via < *out {
                        *out = via;
                    }
                }
            });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let m = dist[i * n + j].min(dist[j * n + i]);
                dist[i * n + j] = m;
                dist[j * n + i] = m;
            }
        }
    }
}

fn triangle_violation_full(n: usize, dist: &[f64]) -> bool {
    (0..n).into_par_iter().any(|i| {
        let ri = &dist[i * n..(i + 1) * n];
        ((i + 1)..n).any(|k| (0..n).any(|j| ri[k] > ri[j] + dist[j * n + k]))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn line(n: usize) -> MetricMeasureSpace {
        let dist = (0..n)
            .map(|i| (0..n).map(|j| (i as f64 - j as f64).abs()).collect())
            .collect();
        MetricMeasureSpace::new(dist, vec![1.0; n]).unwrap()
    }

    #[test]
    fn two_point_space_is_valid() {
        let s = MetricMeasureSpace::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 1.0]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.critical_distances(), &[1.0]);
    }

    #[test]
    fn rejects_asymmetry() {
        let err = MetricMeasureSpace::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]], vec![1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Asymmetric { i: 0, j: 1, .. }));
    }

    #[test]
    fn rejects_triangle_violation_with_witness() {
        let err = MetricMeasureSpace::new(
            vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]],
            vec![1.0; 3],
        )
        .unwrap_err();
        match err {
            Error::Triangle { i, j, k, .. } => assert_eq!((i, k, j), (0, 2, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_diagonal_and_weights() {
        assert!(matches!(
            MetricMeasureSpace::new(vec![vec![0.5]], vec![1.0]),
            Err(Error::NonzeroDiagonal { i: 0, .. })
        ));
        assert!(matches!(
            MetricMeasureSpace::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 0.0]),
            Err(Error::NonPositiveWeight { i: 1, .. })
        ));
        assert!(matches!(
            MetricMeasureSpace::new(vec![vec![0.0, 0.0], vec![0.0, 0.0]], vec![1.0, 1.0]),
            Err(Error::NonPositiveDistance { .. })
        ));
        assert!(matches!(
            MetricMeasureSpace::new(vec![vec![0.0, 1.0]], vec![1.0, 1.0]),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn open_balls_on_the_line() {
        let s = line(5);
        assert_eq!(s.ball_members(2, 1.0).unwrap(), vec![2]);
        assert_eq!(s.ball_members(2, 1.5).unwrap(), vec![1, 2, 3]);
        assert_eq!(s.ball_members(2, s.diameter() + 1.0).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(s.ball_members(7, 1.0).is_err());
    }

    #[test]
    fn ball_measures() {
        let s = line(5);
        assert_eq!(s.ball_measure(2, 0.5), 1.0);
        assert_eq!(s.ball_measure(2, 1.5), 3.0);
        let two = MetricMeasureSpace::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![2.0, 3.0]).unwrap();
        assert_eq!(two.ball_measure(0, 1.5), 5.0);
    }

    #[test]
    fn radial_profile_matches_direct_measure() {
        let s = line(6);
        for x in 0..6 {
            let p = s.radial_profile(x);
            for r in [0.2, 1.0, 1.0000001, 2.5, 3.0, 9.0] {
                assert_eq!(p.measure(r), s.ball_measure(x, r));
            }
        }
    }

    #[test]
    fn closure_repairs_rounding() {
        // 0.1 + 0.2 > 0.3 in floating point, so (0, 2) via 1 is tight the
        // wrong way round when d(0, 2) is stored as 0.30000000000000004.
        let mut d = vec![0.0, 0.1, 0.31, 0.1, 0.0, 0.2, 0.31, 0.2, 0.0];
        close_metric(3, &mut d);
        let s = MetricMeasureSpace::from_flat(3, d, vec![1.0; 3]).unwrap();
        assert!(s.d(0, 2) <= s.d(0, 1) + s.d(1, 2));
    }

    #[test]
    fn neighborhood_is_strict() {
        let s = line(5);
        assert_eq!(s.neighborhood(&[2], 1.0), vec![2]);
        assert_eq!(s.neighborhood(&[1, 2], 1.5), vec![0, 1, 2, 3]);
    }
}
